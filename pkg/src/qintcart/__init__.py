"""Verification kernel for quantum integrable systems in 3D magnetic fields (Cartesian case)."""

__version__ = "0.1.0"

from .catalog import CASE_IDS, make_case, verify_case  # noqa: E402
from .determining import generate, permute, substitute_case  # noqa: E402

__all__ = ["CASE_IDS", "make_case", "verify_case", "generate", "permute", "substitute_case", "__version__"]

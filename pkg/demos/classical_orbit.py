"""
Classical orbits with numerically integrated profiles
=====================================================

Case 4 needs f and g solving f'' = C f^2 + C1 f + C4. We tabulate both
with the built-in Dormand-Prince integrator, follow one orbit of the
classical Hamiltonian and watch H, Q and P stay put.
"""

import numpy as np

from qintcart.catalog import make_case
from qintcart.classical import (
    PhaseState,
    case_observables,
    concretize,
    integrate_profile,
    integrate_trajectory,
    random_ranks,
)
from qintcart.expr import EvalPoint, parse

params = dict(C=1, C1=-1, C2=-1, C3=0.5, C4=0, C5=0)
f = integrate_profile(1, -1, 0, 0.3, 0.0, (-300, 300))
g = integrate_profile(1, -1, 0, 0.2, 0.0, (-300, 300))
print("profile first-integral drift:", f"{f.energy_drift:.1e}", f"{g.energy_drift:.1e}")

system = concretize(make_case("4", params), {"f": f, "g": g, "r": parse("-z^2")})
log = integrate_trajectory(system, PhaseState((0.1, 0.2, 0.3), (0.3, -0.2, 0.1)), 100.0, rtol=1e-10)
print("status:", log.status)
for k, v in log.drift.items():
    print(f"  relative drift of {k}: {v:.1e}")

# tighter tolerances buy smaller drift
for rtol in (1e-6, 1e-8, 1e-10):
    d = integrate_trajectory(system, PhaseState((0.1, 0.2, 0.3), (0.3, -0.2, 0.1)), 100.0, rtol=rtol).drift
    print(f"rtol {rtol:.0e}: max drift {max(d.values()):.1e}")

#############################################################################
# H, Q and P are functionally independent: full rank at generic points.
obs = case_observables(make_case("4"))
print("ranks:", random_ranks(obs, 10, 0, EvalPoint(params={k: float(v) for k, v in params.items()})))

#############################################################################
# Optional picture of the orbit in the (x, y) plane.
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt is not None:
    fig, ax = plt.subplots(1, 2, figsize=(9, 4))
    ax[0].plot(log.states[:, 0], log.states[:, 1], lw=0.6)
    ax[0].set_xlabel("x")
    ax[0].set_ylabel("y")
    for k, v in log.values.items():
        ax[1].semilogy(log.t[1:], np.abs(v[1:] - v[0]) + 1e-18, label=k)
    ax[1].set_xlabel("t")
    ax[1].legend()
    fig.savefig("classical_orbit.png", dpi=120)
    print("wrote classical_orbit.png")

"""Numerical solutions of ``f'' = C f² + C1 f + C4`` usable as field profiles."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .dopri import NonFiniteState, StepSizeUnderflow, dopri5

# power coefficients (in s) of the quintic Hermite basis, rows match
# [f0, h f0', h² f0'', f1, h f1', h² f1'']
_HERMITE5 = np.array([
    [1, 0, 0, -10, 15, -6],
    [0, 1, 0, -6, 8, -3],
    [0, 0, 0.5, -1.5, 1.5, -0.5],
    [0, 0, 0, 10, -15, 6],
    [0, 0, 0, -4, 7, -3],
    [0, 0, 0, 0.5, -1, 0.5],
])


class ProfileRangeError(ValueError):
    def __init__(self, x, lo, hi):
        super().__init__(f"x = {x!r} outside the tabulated profile range [{lo!r}, {hi!r}]")
        self.x = x


def first_integral(C, C1, C4, f, fp):
    """``E = ½ f'² - (C/3) f³ - (C1/2) f² - C4 f``, constant along solutions."""
    return 0.5 * fp * fp - C / 3.0 * f ** 3 - 0.5 * C1 * f * f - C4 * f


@dataclass
class Profile:
    """Tabulated solution with C²-consistent quintic Hermite interpolation.

    ``profile(x)`` is f, ``profile(x, 1)`` is f' and ``profile(x, 2)`` is f'';
    the three are exact derivatives of one piecewise quintic.
    """

    C: float
    C1: float
    C4: float
    x: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    energy_drift: float = 0.0
    escape: dict = field(default_factory=dict)  # direction -> escape x
    _coef: np.ndarray = field(init=False, repr=False)
    _xs: list = field(init=False, repr=False)

    def __post_init__(self):
        fpp = self.C * self.f ** 2 + self.C1 * self.f + self.C4
        h = np.diff(self.x)
        data = np.stack([self.f[:-1], h * self.fp[:-1], h * h * fpp[:-1],
                         self.f[1:], h * self.fp[1:], h * h * fpp[1:]], axis=1)
        self._coef = data @ _HERMITE5
        self._xs = self.x.tolist()
        self._h = h.tolist()
        self._rows = self._coef.tolist()

    @property
    def range(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    def _locate(self, x: float) -> int:
        lo, hi = self._xs[0], self._xs[-1]
        if not lo <= x <= hi:
            raise ProfileRangeError(x, lo, hi)
        return min(max(bisect.bisect_right(self._xs, x) - 1, 0), len(self._h) - 1)

    def _scalar(self, x: float, order: int) -> float:
        j = self._locate(x)
        h = self._h[j]
        s = (x - self._xs[j]) / h
        c = self._rows[j]
        if order == 0:
            return c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))))
        if order == 1:
            return (c[1] + s * (2 * c[2] + s * (3 * c[3] + s * (4 * c[4] + s * 5 * c[5])))) / h
        if order == 2:
            return (2 * c[2] + s * (6 * c[3] + s * (12 * c[4] + s * 20 * c[5]))) / (h * h)
        raise ValueError("profiles provide derivatives up to order 2")

    def __call__(self, x, order: int = 0):
        if np.ndim(x) == 0:
            return self._scalar(float(x), order)
        return np.array([self._scalar(float(v), order) for v in np.ravel(x)]).reshape(np.shape(x))

    def derivative(self, order: int):
        return lambda x: self(x, order)

    def energy(self, x):
        return first_integral(self.C, self.C1, self.C4, self(x), self(x, 1))


def escape_bound(C, C1, C4, f0) -> float:
    """|f| beyond which a C ≠ 0 solution is treated as escaping to a pole."""
    return 10.0 * (1.0 + abs(f0) + abs(C1 / C) + math.sqrt(abs(C4 / C)))


def integrate_profile(C, C1, C4, f0, f0p, x_range, *, rtol=1e-12, atol=1e-14, dx=0.01) -> Profile:
    """Solve from x = 0 outward to both ends of ``x_range``.

    Integration stops early when |f| passes :func:`escape_bound` (C ≠ 0) or
    the step size underflows; the escape point is recorded in
    ``profile.escape`` and the table ends there. ``energy_drift`` is the
    largest ``|E - E(0)| / (1 + |E(0)|)`` over accepted steps.
    """
    C, C1, C4 = float(C), float(C1), float(C4)
    lo, hi = float(x_range[0]), float(x_range[1])
    if not lo <= 0.0 <= hi:
        raise ValueError("x_range must contain the initial point x = 0")
    bound = escape_bound(C, C1, C4, f0) if C != 0 else np.inf

    def rhs(_, y):
        return np.array([y[1], C * y[0] * y[0] + C1 * y[0] + C4])

    E0 = first_integral(C, C1, C4, f0, f0p)
    drift = 0.0
    escape = {}
    pieces = []
    for end in (lo, hi):
        if end == 0.0:
            continue
        try:
            sol = dopri5(rhs, (0.0, end), [f0, f0p], rtol=rtol, atol=atol,
                         event=lambda t, y: abs(y[0]) > bound)
        except (StepSizeUnderflow, NonFiniteState) as exc:
            raise RuntimeError(f"profile integration failed at x = {exc.t!r}") from exc
        E = first_integral(C, C1, C4, sol.y[:, 0], sol.y[:, 1])
        drift = max(drift, float(np.max(np.abs(E - E0))) / (1 + abs(E0)))
        stop = sol.t[-1]
        if sol.status == "event":
            # keep only the part safely inside the bound
            escape[end > 0 and "+" or "-"] = float(stop)
            stop = sol.t[-2] if len(sol.t) > 1 else 0.0
        n = max(int(math.ceil(abs(stop) / dx)), 1)
        grid = np.linspace(0.0, stop, n + 1)
        if len(sol.segments) and stop != 0.0:
            pieces.append(sol(grid))
        else:
            pieces.append(np.array([[f0, f0p]]))
            grid = np.array([0.0])
        pieces[-1] = (grid, pieces[-1])
    xs = [np.array([0.0])]
    ys = [np.array([[f0, f0p]])]
    for grid, vals in pieces:
        xs.append(grid[1:])
        ys.append(vals[1:])
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    order = np.argsort(x)
    x, y = x[order], y[order]
    if len(x) < 2:
        raise ValueError("profile range is empty")
    return Profile(C, C1, C4, x, y[:, 0], y[:, 1], drift, escape)

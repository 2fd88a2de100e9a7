"""Dormand-Prince 5(4) with PI step control and continuous output."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Butcher tableau (Hairer, Norsett, Wanner, vol. I)
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# error weights: 5th order minus embedded 4th order
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
# dense output
D1 = -12715105075 / 11282082432
D3 = 87487479700 / 32700410799
D4 = -10690763975 / 1880347072
D5 = 701980252875 / 199316789632
D6 = -1453857185 / 822651844
D7 = 69997945 / 29380423


class StepSizeUnderflow(RuntimeError):
    """The controller asked for a step below the representable minimum."""

    def __init__(self, t: float, message: str = ""):
        super().__init__(message or f"step size underflow at t = {t!r}")
        self.t = t


class NonFiniteState(RuntimeError):
    def __init__(self, t: float):
        super().__init__(f"non-finite state at t = {t!r}")
        self.t = t


@dataclass
class DenseSegment:
    t0: float
    h: float
    r: np.ndarray  # (5, n)

    def __call__(self, t):
        th = (t - self.t0) / self.h
        th1 = 1.0 - th
        r1, r2, r3, r4, r5 = self.r
        return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))


@dataclass
class Solution:
    """Accepted steps of one integration; callable through the continuous extension."""

    t: np.ndarray
    y: np.ndarray  # (len(t), n)
    segments: list = field(repr=False, default_factory=list)
    status: str = "success"
    message: str = ""
    t_event: float | None = None
    nfev: int = 0
    nrejected: int = 0

    @property
    def success(self) -> bool:
        return self.status == "success"

    def __call__(self, t):
        """State at time(s) ``t`` inside the integrated interval."""
        t = np.asarray(t, dtype=float)
        if not self.segments:
            return np.broadcast_to(self.y[0], t.shape + self.y.shape[1:]).copy()
        if not hasattr(self, "_stack"):
            self._t0 = np.array([s.t0 for s in self.segments])
            self._h = np.array([s.h for s in self.segments])
            self._stack = np.stack([s.r for s in self.segments])
        tt = np.atleast_1d(t)
        sign = 1.0 if self._h[0] > 0 else -1.0
        j = np.clip(np.searchsorted(sign * self._t0, sign * tt, side="right") - 1, 0, len(self._t0) - 1)
        th = ((tt - self._t0[j]) / self._h[j])[:, None]
        th1 = 1.0 - th
        r = self._stack[j]
        out = r[:, 0] + th * (r[:, 1] + th1 * (r[:, 2] + th * (r[:, 3] + th1 * r[:, 4])))
        return out[0] if t.ndim == 0 else out


def _initial_step(f, t0, y0, f0, direction, rtol, atol):
    # Hairer's starting-step heuristic
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = f(t0 + direction * h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    h1 = max(1e-6, h0 * 1e-3) if max(d1, d2) <= 1e-15 else (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def dopri5(f, t_span, y0, *, rtol=1e-8, atol=None, h0=None, max_step=np.inf, max_steps=1_000_000,
           event=None, safety=0.9, fac_min=0.2, fac_max=10.0, beta=0.04, soft_fail=(),
           raise_on_failure=True) -> Solution:
    """Integrate ``y' = f(t, y)`` over ``t_span`` (either direction).

    ``event(t, y) -> bool`` stops the integration after the first accepted
    step where it is true (status ``"event"``). A step below
    ``16 * eps * |t|`` raises :class:`StepSizeUnderflow`; a non-finite state
    raises :class:`NonFiniteState`. Both exceptions carry ``.t``. With
    ``raise_on_failure=False`` they end the run instead (status
    ``"underflow"`` or ``"nonfinite"``), as does any exception type listed in
    ``soft_fail`` raised by ``f`` (status ``"stopped"``); the accepted steps so
    far are returned.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    y = np.array(y0, dtype=float)
    if atol is None:
        atol = rtol
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    k1 = np.asarray(f(t0, y), dtype=float)
    nfev = 1
    h = abs(h0) if h0 else _initial_step(f, t0, y, k1, direction, rtol, atol)
    h = min(h, max_step, span) if span > 0 else 0.0
    alpha = 0.2 - 0.75 * beta
    t = t0
    ts, ys, segs = [t0], [y.copy()], []
    try:
        _run = _loop(f, t, t1, y, k1, h, direction, rtol, atol, max_step, max_steps, event, safety,
                     fac_min, fac_max, beta, alpha, ts, ys, segs, soft_fail)
    except (StepSizeUnderflow, NonFiniteState) as exc:
        if raise_on_failure:
            raise
        status = "underflow" if isinstance(exc, StepSizeUnderflow) else "nonfinite"
        return Solution(np.array(ts), np.array(ys), segs, status, str(exc), exc.t, nfev, 0)
    status, msg, t_event, n_f, rejected = _run
    return Solution(np.array(ts), np.array(ys), segs, status, msg, t_event, nfev + n_f, rejected)


def _loop(f, t, t1, y, k1, h, direction, rtol, atol, max_step, max_steps, event, safety, fac_min, fac_max,
          beta, alpha, ts, ys, segs, soft_fail):
    err_old = 1e-4
    rejected = 0
    nfev = 0
    status, msg, t_event = "success", "", None
    steps = 0
    while direction * (t1 - t) > 0:
        if steps >= max_steps:
            status, msg = "max_steps", f"gave up after {max_steps} steps at t = {t!r}"
            break
        h_min = 16 * np.finfo(float).eps * max(abs(t), 1.0)
        if h < h_min:
            raise StepSizeUnderflow(t)
        last = h >= abs(t1 - t)
        if last:
            h = abs(t1 - t)
        hs = direction * h
        try:
            k2 = f(t + C2 * hs, y + hs * (A21 * k1))
            k3 = f(t + C3 * hs, y + hs * (A31 * k1 + A32 * k2))
            k4 = f(t + C4 * hs, y + hs * (A41 * k1 + A42 * k2 + A43 * k3))
            k5 = f(t + C5 * hs, y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
            k6 = f(t + hs, y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
            y_new = y + hs * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
            k7 = f(t + hs, y_new)
        except soft_fail as exc:
            return "stopped", str(exc), t, nfev, rejected
        nfev += 6
        err_vec = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if not np.isfinite(err):
            if not np.all(np.isfinite(y_new)) and h <= h_min * 2:
                raise NonFiniteState(t)
            h *= fac_min
            rejected += 1
            continue
        if err <= 1.0:
            steps += 1
            dy = y_new - y
            r = np.array([y, dy, hs * k1 - dy, dy - hs * k7 - (hs * k1 - dy),
                          hs * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)])
            segs.append(DenseSegment(t, hs, r))
            t = t1 if last else t + hs
            y, k1 = y_new, k7
            if not np.all(np.isfinite(y)):
                raise NonFiniteState(t)
            ts.append(t)
            ys.append(y.copy())
            fac = fac_max if err == 0 else min(fac_max, max(fac_min, safety * err ** -alpha * err_old ** beta))
            err_old = max(err, 1e-4)
            h = min(h * fac, max_step)
            if event is not None and event(t, y):
                status, msg, t_event = "event", f"event at t = {t!r}", t
                break
        else:
            rejected += 1
            h *= max(fac_min, safety * err ** -alpha)
    return status, msg, t_event, nfev, rejected

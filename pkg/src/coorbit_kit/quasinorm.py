"""Step quasi-norms homogeneous with respect to an expansive matrix, and an empirical equivalence test."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .group import is_expansive

J_CAP = 2000


@dataclass(frozen=True, eq=False)
class QuasiNorm:
    """``rho(x) = |det A|^j`` for ``x`` in ``A^{j+1} Omega \\ A^j Omega``, ``Omega = {x^T P x <= 1}``."""

    A: np.ndarray
    P: np.ndarray
    detA: float
    terms: int = 0
    _powers: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def _inv_power(self, j: int) -> np.ndarray:
        """``A^{-j}``; cached."""
        if j not in self._powers:
            self._powers[j] = np.linalg.matrix_power(self.A, -j) if j != 0 else np.eye(self.dim)
        return self._powers[j]

    def _member(self, X: np.ndarray, js: np.ndarray) -> np.ndarray:
        """Whether ``X[n]`` lies in ``A^{js[n]} Omega``; overflow counts as outside."""
        out = np.zeros(len(X), dtype=bool)
        for j in np.unique(js):
            sel = js == j
            with np.errstate(over="ignore", invalid="ignore"):
                y = X[sel] @ self._inv_power(int(j)).T
                q = np.einsum("nd,de,ne->n", y, self.P, y)
            out[sel] = np.isfinite(q) & (q <= 1.0)
        return out

    def shell_index(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Smallest ``j`` with ``x`` in ``A^j Omega`` and a saturation flag."""
        X = np.asarray(points, dtype=float).reshape(-1, self.dim)
        n = len(X)
        start = self._member(X, np.zeros(n, dtype=int))
        lo = np.where(start, 0, 0)  # non-member index (to be found for members)
        hi = np.zeros(n, dtype=int)  # member index (to be found for non-members)
        saturated = np.zeros(n, dtype=bool)
        # bracket: members walk down, non-members walk up, doubling the step
        todo = start.copy()
        step = 1
        hi[start] = 0
        while todo.any():
            cand = -np.full(todo.sum(), step)
            m = self._member(X[todo], cand)
            idx = np.flatnonzero(todo)
            hi[idx[m]] = cand[m]
            lo[idx[~m]] = cand[~m]
            todo[idx[~m]] = False
            step *= 2
            if step > J_CAP:
                saturated[idx[m]] = True
                lo[idx[m]] = -J_CAP - 1
                hi[idx[m]] = -J_CAP
                todo[:] = False
        todo = ~start
        step = 1
        while todo.any():
            cand = np.full(todo.sum(), step)
            m = self._member(X[todo], cand)
            idx = np.flatnonzero(todo)
            hi[idx[m]] = cand[m]
            lo[idx[~m]] = cand[~m]
            todo[idx[m]] = False
            step *= 2
            if step > J_CAP:
                saturated[idx[~m]] = True
                lo[idx[~m]] = J_CAP
                hi[idx[~m]] = J_CAP + 1
                todo[:] = False
        # bisection: lo non-member, hi member
        while True:
            gap = hi - lo > 1
            if not gap.any():
                break
            mid = (lo + hi) // 2
            m = self._member(X[gap], mid[gap])
            idx = np.flatnonzero(gap)
            hi[idx[m]] = mid[gap][m]
            lo[idx[~m]] = mid[gap][~m]
        return hi, saturated

    def evaluate(self, points, with_flag: bool = False):
        X = np.asarray(points, dtype=float)
        shape = X.shape[:-1] if X.ndim > 1 or self.dim > 1 else X.shape
        X = X.reshape(-1, self.dim)
        zero = ~np.any(X != 0, axis=-1)
        j, sat = self.shell_index(np.where(zero[:, None], 1.0, X))
        val = np.where(zero, 0.0, self.detA ** (j - 1.0))
        val = val.reshape(shape)
        if with_flag:
            return val, sat.reshape(shape)
        return val if val.ndim else float(val)


def build_quasinorm(A, max_terms: int = 10_000, tol: float = 1e-14) -> QuasiNorm:
    """``P = sum_k (A^{-k})^T A^{-k}``, so that ``P - A^{-T} P A^{-1} = I``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if not is_expansive(A):
        raise ValueError("A is not expansive")
    Ai = np.linalg.inv(A)
    P = np.zeros_like(A)
    M = np.eye(A.shape[0])
    for k in range(max_terms):
        term = M.T @ M
        P += term
        if np.linalg.norm(term, 2) < tol:
            break
        M = Ai @ M
    else:
        raise RuntimeError(f"series did not converge within {max_terms} terms")
    P = (P + P.T) / 2
    gap = np.linalg.eigvalsh(P - Ai.T @ P @ Ai).min()
    if not gap > 0:
        raise RuntimeError("ellipsoid is not strictly expanded by A")
    return QuasiNorm(A, P, float(abs(np.linalg.det(A))), k + 1)


def quasi_triangle_constant(qn: QuasiNorm, pairs: int = 10_000, rng=None, scale_decades: float = 3.0) -> float:
    rng = np.random.default_rng(rng)
    d = qn.dim
    x = rng.standard_normal((pairs, d)) * 10 ** rng.uniform(-scale_decades, scale_decades, (pairs, 1))
    y = rng.standard_normal((pairs, d)) * 10 ** rng.uniform(-scale_decades, scale_decades, (pairs, 1))
    return float(np.max(qn.evaluate(x + y) / (qn.evaluate(x) + qn.evaluate(y))))


def _directions(dim: int, n_random: int, rng) -> np.ndarray:
    dirs = list(np.eye(dim))
    if dim > 1:
        r = rng.standard_normal((n_random, dim))
        dirs.extend(r / np.linalg.norm(r, axis=1, keepdims=True))
    else:
        dirs.append(-np.eye(1)[0])
    return np.array(dirs)


def _envelope_slope(t: np.ndarray, y: np.ndarray, window: float) -> float:
    """Least-squares slope of the running (max + min)/2 of ``y`` over ``window`` in ``t``."""
    mids, ts = [], []
    for k in range(len(t)):
        sel = np.abs(t - t[k]) <= window / 2
        if t[k] - window / 2 < t[0] - 1e-9 or t[k] + window / 2 > t[-1] + 1e-9:
            continue
        mids.append((y[sel].max() + y[sel].min()) / 2)
        ts.append(t[k])
    if len(ts) < 2:
        return float(np.polyfit(t, y, 1)[0])
    return float(np.polyfit(np.array(ts), np.array(mids), 1)[0])


def equivalence_test(q1: QuasiNorm, q2: QuasiNorm, radii=None, directions=None, threshold: float = 1e3,
                     slope_tol: float = 0.01, window_decades: float = 2.0, rng=None) -> dict:
    """Empirical evidence for ``rho_1 ~ rho_2`` on radial rays ``r d``.

    ``equivalent`` requires ``ratio_hi / ratio_lo < threshold`` and, on every
    ray, a log-log trend of the ratio flatter than ``slope_tol`` per decade.
    The trend is the slope of the running envelope midline over
    ``window_decades``, which discounts the bounded oscillation of step
    quasi-norms with different shell periods.
    """
    if q1.dim != q2.dim:
        raise ValueError("quasi-norms live in different dimensions")
    rng = np.random.default_rng(rng)
    radii = np.logspace(-4, 4, 801) if radii is None else np.asarray(radii, dtype=float)
    dirs = _directions(q1.dim, 6, rng) if directions is None else np.atleast_2d(np.asarray(directions, dtype=float))
    t = np.log10(radii)
    lo, hi, worst = np.inf, 0.0, 0.0
    slopes = []
    for d in dirs:
        pts = radii[:, None] * d[None, :]
        r = q1.evaluate(pts) / q2.evaluate(pts)
        lo, hi = min(lo, float(r.min())), max(hi, float(r.max()))
        s = _envelope_slope(t, np.log10(r), window_decades)
        slopes.append(s)
        worst = max(worst, abs(s))
    equivalent = bool(hi / lo < threshold and worst < slope_tol)
    return {
        "ratio_lo": lo,
        "ratio_hi": hi,
        "slope_per_decade": worst,
        "slopes": slopes,
        "equivalent": equivalent,
        "verdict": "equivalent (empirical)" if equivalent else "not equivalent (empirical)",
        "n_directions": len(dirs),
        "radii": [float(radii.min()), float(radii.max()), len(radii)],
    }

"""Band-limited analysing windows: smooth bump construction and Calderon normalisation."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .fourier import FreqGrid, interpolate, read_container, write_container
from .group import DilationGroup, sample_params
from .sets import Annulus, Box, EssentialSupport, FrequencySet, Image, Union


@dataclass(frozen=True, eq=False)
class Window:
    """Fourier samples of an analysing vector.

    ``profile`` is an optional exact evaluator of ``psi_hat`` at arbitrary
    frequencies; when absent, off-grid values come from multilinear
    interpolation of ``fhat``.
    """

    grid: FreqGrid
    fhat: np.ndarray
    support: FrequencySet
    calderon_constant: float | None = None
    profile: Callable[[np.ndarray], np.ndarray] | None = None
    calderon_defect: float | None = None

    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.profile is not None:
            return np.asarray(self.profile(points))
        return interpolate(self.grid, self.fhat, points)

    def scaled(self, s: complex) -> "Window":
        prof = None if self.profile is None else (lambda p, f=self.profile: s * f(p))
        return replace(self, fhat=s * self.fhat, profile=prof, calderon_constant=None, calderon_defect=None)

    def spatial(self) -> np.ndarray:
        return self.grid.to_spatial(self.fhat)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.fhat) ** 2) * self.grid.dxi_volume))

    def save(self, path) -> None:
        header = self.grid.to_dict()
        header["support"] = self.support.to_dict()
        header["calderon_constant"] = self.calderon_constant
        write_container(path, header, self.fhat)

    @classmethod
    def load(cls, path) -> "Window":
        header, data = read_container(path)
        grid = FreqGrid.from_dict(header)
        return cls(grid, data.reshape(grid.shape), FrequencySet.from_dict(header["support"]),
                   header.get("calderon_constant"))


def smooth_step(t) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
        return a / (a + b)


def plateau_profile(C: FrequencySet, margin: float) -> Callable[[np.ndarray], np.ndarray]:
    """Smooth bump equal to 1 on ``C`` and vanishing outside ``C`` enlarged by ``margin``.

    For linear images the margin is measured in the pre-image coordinates.
    """
    m = float(margin)
    if isinstance(C, Box):
        lo, hi = np.array(C.lo), np.array(C.hi)

        def box(p):
            p = np.asarray(p, dtype=float)
            v = smooth_step((p - (lo - m)) / m) * smooth_step(((hi + m) - p) / m)
            return np.prod(v, axis=-1)

        return box
    if isinstance(C, Annulus):
        r0, r1 = C.r_inner, C.r_outer

        def ring(p):
            r = np.linalg.norm(np.asarray(p, dtype=float), axis=-1)
            return smooth_step((r - (r0 - m)) / m) * smooth_step(((r1 + m) - r) / m)

        return ring
    if isinstance(C, Image):
        inner = plateau_profile(C.base, m)
        inv = np.linalg.inv(C.matrix)
        return lambda p: inner(np.asarray(p, dtype=float) @ inv.T)
    if isinstance(C, Union):
        parts = [plateau_profile(q, m) for q in C.parts]
        return lambda p: np.max([f(p) for f in parts], axis=0)
    raise TypeError(f"no bump construction for {type(C).__name__}")


def build_bump_window(grid: FreqGrid, C: FrequencySet, margin: float,
                      essential: EssentialSupport | None = None) -> Window:
    """Real, nonnegative smooth bump: plateau 1 on ``C``, support ``C`` + ``margin``."""
    if margin <= 0:
        raise ValueError("margin must be positive")
    if C.dim != grid.dim:
        raise ValueError("set and grid dimensions differ")
    essential = essential or EssentialSupport.punctured(grid.dim)
    support = C.enlarged(margin)
    if isinstance(C, Annulus) and C.r_inner - margin <= 0:
        raise ValueError("margin pushes the support onto the origin, outside the essential support")
    if essential.set_distance(support) <= 0:
        raise ValueError("margin pushes the support outside the essential frequency support")
    lo, hi = support.bbox()
    glo, ghi = grid.extent()
    if np.any(lo < glo) or np.any(hi > ghi):
        raise ValueError("support does not fit inside the frequency grid")
    profile = plateau_profile(C, margin)
    fhat = profile(grid.points()).astype(complex)
    inside = np.count_nonzero(fhat)
    if inside < 4 ** grid.dim:
        raise ValueError(f"set is not representable on this grid ({inside} nonzero samples)")
    return Window(grid, fhat, support, None, profile)


def window_from_profile(grid: FreqGrid, profile, support: FrequencySet) -> Window:
    return Window(grid, np.asarray(profile(grid.points()), dtype=complex), support, None, profile)


@dataclass
class CalderonResult:
    values: np.ndarray
    unreliable: np.ndarray

    def max_deviation(self, target: float = 1.0) -> float:
        return float(np.max(np.abs(self.values - target)))


def _calderon_sum(w: Window, samples, points) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(points, dtype=float)
    total = np.zeros(pts.shape[:-1])
    touched = np.zeros(pts.shape[:-1], dtype=bool)
    params = sample_params(samples)
    lo, hi = params.min(axis=0), params.max(axis=0)
    for s, p in zip(samples, params):
        term = np.abs(w.evaluate(pts @ s.h)) ** 2
        total += s.weight * term
        if np.any((p <= lo) | (p >= hi)):
            touched |= term > 0
    return total, touched


def calderon_integral(w: Window, g: DilationGroup, samples, probe) -> CalderonResult:
    """Quadrature of ``int_H |psi_hat(h^T xi)|^2 dmu_H(h)`` at each probe point.

    A point is flagged unreliable when its integrand is zero on every sample
    or nonzero at the edge of the sampled chart window (truncated orbit).
    """
    probe = np.asarray(probe, dtype=float)
    if probe.shape[-1] != g.dim:
        probe = probe.reshape(-1, g.dim)
    values, touched = _calderon_sum(w, samples, probe)
    unreliable = touched | (values <= 0)
    if g.kind == "explicit":
        unreliable = values <= 0
    return CalderonResult(values, unreliable)


def normalize_calderon(w: Window, g: DilationGroup, samples, probe, spread_tol: float = 1e-3) -> Window:
    """Rescale ``w`` so its Calderon integral is 1 on the probe points.

    When the integral is constant over the probe (relative spread below
    ``spread_tol``) the window is divided by the square root of its mean;
    otherwise it is divided pointwise by ``sqrt(c(xi))``, with ``c`` evaluated
    exactly by the sampled orbit sum, which is invariant along sampled orbits.
    """
    res = calderon_integral(w, g, samples, probe)
    c = res.values
    cmax = float(np.max(c)) if c.size else 0.0
    if cmax <= 0 or float(np.min(c)) <= 1e-6 * cmax:
        raise ValueError("not admissible over this sampling: Calderon integral vanishes on the probe")
    if np.max(np.abs(c - 1.0)) <= 1e-12:
        return replace(w, calderon_constant=1.0, calderon_defect=float(np.max(np.abs(c - 1.0))))
    mean = float(np.mean(c))
    if (cmax - float(np.min(c))) / mean <= spread_tol:
        out = w.scaled(1.0 / np.sqrt(mean))
    else:
        base = w
        samples = list(samples)

        def profile(p, base=base, samples=samples):
            p = np.asarray(p, dtype=float)
            val = base.evaluate(p)
            nz = val != 0
            outv = np.zeros(p.shape[:-1], dtype=np.result_type(val, float))
            if np.any(nz):
                cc, _ = _calderon_sum(base, samples, p[nz])
                outv[nz] = val[nz] / np.sqrt(np.where(cc > 0, cc, np.inf))
            return outv

        out = Window(w.grid, np.asarray(profile(w.grid.points()), dtype=complex), w.support, None, profile)
    check = calderon_integral(out, g, samples, probe)
    return replace(out, calderon_constant=1.0, calderon_defect=check.max_deviation())

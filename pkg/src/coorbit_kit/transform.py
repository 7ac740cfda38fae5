"""FFT-based continuous wavelet transform on G = R^d x| H and checks built on it."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import ndimage

from .fourier import FreqGrid, interpolate, read_container, write_container, write_json_atomic
from .group import sample_params
from .sets import FrequencySet, Image, sets_intersect
from .window import Window


@dataclass(frozen=True, eq=False)
class Signal:
    """Band-limited function given by Fourier samples, with an optional exact evaluator."""

    grid: FreqGrid
    fhat: np.ndarray
    band_support: FrequencySet
    profile: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "signal"

    @classmethod
    def from_profile(cls, grid: FreqGrid, profile, band: FrequencySet, name: str = "signal") -> "Signal":
        return cls(grid, np.asarray(profile(grid.points()), dtype=complex), band, profile, name)

    @classmethod
    def from_window(cls, w: Window, name: str = "window") -> "Signal":
        return cls(w.grid, w.fhat.astype(complex), w.support, w.profile, name)

    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.profile is not None:
            return np.asarray(self.profile(points))
        return interpolate(self.grid, self.fhat, points)

    def spatial(self) -> np.ndarray:
        return self.grid.to_spatial(self.fhat)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.fhat) ** 2) * self.grid.dxi_volume))

    def scaled(self, s: complex) -> "Signal":
        prof = None if self.profile is None else (lambda p, f=self.profile: s * f(p))
        return replace(self, fhat=s * self.fhat, profile=prof)

    def on_grid(self, grid: FreqGrid) -> "Signal":
        return replace(self, grid=grid, fhat=np.asarray(self.evaluate(grid.points()), dtype=complex))

    def translated(self, x0) -> "Signal":
        """``f(. - x0)``: Fourier side multiplied by ``exp(-2 pi i <x0, xi>)``."""
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        phase = lambda p: np.exp(-2j * np.pi * (np.asarray(p, dtype=float) @ x0))
        prof = None if self.profile is None else (lambda p, f=self.profile: f(p) * phase(p))
        return replace(self, fhat=self.fhat * phase(self.grid.points()), profile=prof)

    def dilated(self, g) -> "Signal":
        """``pi(0, g) f = |det g|^{-1/2} f(g^{-1} .)``, Fourier side ``|det g|^{1/2} fhat(g^T xi)``."""
        g = np.atleast_2d(np.asarray(g, dtype=float))
        det = abs(np.linalg.det(g))
        prof_base = self.evaluate
        prof = lambda p: np.sqrt(det) * prof_base(np.asarray(p, dtype=float) @ g)
        band = Image(np.linalg.inv(g).T, self.band_support)
        return Signal(self.grid, np.asarray(prof(self.grid.points()), dtype=complex), band,
                      prof if self.profile is not None else None, self.name)

    def save(self, path) -> None:
        header = self.grid.to_dict()
        header["band_support"] = self.band_support.to_dict()
        write_container(path, header, self.fhat)

    @classmethod
    def load(cls, path) -> "Signal":
        header, data = read_container(path)
        grid = FreqGrid.from_dict(header)
        return cls(grid, data.reshape(grid.shape), FrequencySet.from_dict(header["band_support"]))


@dataclass
class GTransform:
    """Coefficients ``W(x, h)`` indexed (sample, spatial point) on the grid's spatial lattice."""

    samples: list
    grid: FreqGrid
    coeffs: np.ndarray
    flagged: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def dets(self) -> np.ndarray:
        return np.array([s.det for s in self.samples])

    @property
    def weights(self) -> np.ndarray:
        return np.array([s.weight for s in self.samples])

    def active(self) -> np.ndarray:
        return ~self.flagged

    def save(self, path) -> None:
        from pathlib import Path
        path = Path(path)
        header = self.grid.to_dict()
        header.update(meta=self.meta, flagged=self.flagged.tolist(),
                      samples=[{"param": list(s.param), "weight": s.weight, "h": s.h.tolist()} for s in self.samples])
        write_container(path, header, self.coeffs)


def _slice_flagged(w: Window, f: Signal, h: np.ndarray, grid: FreqGrid) -> bool:
    """True if the product support ``h^{-T} supp psi_hat`` within the band leaves the grid."""
    K = Image(np.linalg.inv(h).T, w.support)
    klo, khi = K.bbox()
    blo, bhi = f.band_support.bbox()
    lo, hi = np.maximum(klo, blo), np.minimum(khi, bhi)
    if np.any(lo > hi):
        return False
    glo, ghi = grid.extent()
    return bool(np.any(lo < glo) or np.any(hi > ghi))


def frequency_slices(f: Signal, w: Window, samples) -> np.ndarray:
    """``fhat(xi) conj(psi_hat(h^T xi)) |det h|^{1/2}`` for each sample, shape ``(S, *n)``."""
    pts = f.grid.points()
    out = np.empty((len(samples),) + f.grid.shape, dtype=complex)
    for k, s in enumerate(samples):
        out[k] = f.fhat * np.conj(w.evaluate(pts @ s.h)) * np.sqrt(s.det)
    return out


def cwt(f: Signal, w: Window, samples, warn: bool = True) -> GTransform:
    """``W_psi f(., h)`` for each sample ``h`` by one inverse FFT per slice."""
    if f.grid.dim != w.grid.dim:
        raise ValueError("signal and window grids differ in dimension")
    if f.grid != w.grid and w.profile is None:
        # window off its own grid is read by interpolation; still a consistent convention
        if np.any(np.array(f.grid.spacing) != np.array(w.grid.spacing)):
            warnings.warn("window grid differs from signal grid; window values are interpolated", stacklevel=2)
    samples = list(samples)
    flagged = np.array([_slice_flagged(w, f, s.h, f.grid) for s in samples], dtype=bool)
    if warn and flagged.any():
        warnings.warn(f"{int(flagged.sum())} slices leave the frequency grid and are flagged", stacklevel=2)
    coeffs = f.grid.to_spatial(frequency_slices(f, w, samples), axes_from=1)
    return GTransform(samples, f.grid, coeffs, flagged, {"signal": f.name})


def reproducing_residual(f: Signal, w1: Window, w2: Window, samples) -> dict:
    """Relative L^2(G) discrepancy between ``W_{psi1} f * W_{psi2} psi1`` and ``W_{psi2} f``.

    The group convolution
    ``(F1 * F2)(x, k) = sum_i w_i |det h_i|^{-1} int F1(y, h_i) F2(h_i^{-1}(x - y), h_i^{-1} k) dy``
    is evaluated slice by slice on the Fourier side of the x-variable, where it
    reads ``sum_i w_i F1^(xi, h_i) F2^(h_i^T xi, h_i^{-1} k)``.  ``F2^(eta, m)``
    is the Fourier transform of ``W_{psi2} psi1(., m)``, evaluated off-grid
    through the windows' evaluators.  Both sides are compared in the discretized
    ``L^2(G)`` norm (Parseval in ``x``).
    """
    if w1.calderon_constant != 1 or w2.calderon_constant != 1:
        raise ValueError("both windows must be Calderon-normalized")
    samples = list(samples)
    grid = f.grid
    pts = grid.points().reshape(-1, grid.dim)
    fhat = f.fhat.reshape(-1)
    hs = np.array([s.h for s in samples])
    wts = np.array([s.weight for s in samples])
    dets = np.array([s.det for s in samples])
    eta = np.einsum("pd,ide->ipe", pts, hs)  # h_i^T xi, shape (S, P, d)
    psi1_eta = np.array([w1.evaluate(e) for e in eta])
    F1 = fhat[None, :] * np.conj(psi1_eta) * np.sqrt(dets)[:, None]
    # F2^(h_i^T xi, m) needs psi2 at m^T h_i^T xi = (h_i m)^T xi; cache by the product matrix
    cache: dict = {}

    def psi2_at(M):
        key = tuple(np.round(M, 12).ravel())
        if key not in cache:
            cache[key] = np.conj(w2.evaluate(pts @ M))
        return cache[key]

    active = np.flatnonzero(np.any(F1 != 0, axis=1))
    base = (wts[:, None] * F1 * psi1_eta)[active]
    num = 0.0
    den = 0.0
    for k, sk in enumerate(samples):
        ms = [np.linalg.inv(samples[i].h) @ sk.h for i in active]
        W2 = np.array([psi2_at(samples[i].h @ m) for i, m in zip(active, ms)]).reshape(len(active), -1)
        sq = np.sqrt(np.abs([np.linalg.det(m) for m in ms]))
        lhs = np.einsum("ip,ip,i->p", base, W2, sq) if len(active) else np.zeros(len(pts), dtype=complex)
        rhs = fhat * psi2_at(sk.h).reshape(-1) * np.sqrt(dets[k])
        mass = wts[k] / dets[k] * grid.dxi_volume
        num += mass * np.sum(np.abs(lhs - rhs) ** 2)
        den += mass * np.sum(np.abs(rhs) ** 2)
    params = sample_params(samples)
    edge = (params[:, 0] <= params[:, 0].min()) | (params[:, 0] >= params[:, 0].max())
    truncated = bool(np.any(np.abs(F1[edge]) > 1e-12 * max(np.abs(F1).max(), 1e-300)))
    if truncated:
        warnings.warn("transporter window exceeds the sampled group range", stacklevel=2)
    return {"residual": float(np.sqrt(num / den)) if den > 0 else 0.0, "coverage_flag": truncated}


def decay_envelope(t: GTransform, K1: FrequencySet, K2: FrequencySet, N: float) -> dict:
    """Fitted constant of ``|W| <= C (1 + |x|)^{-N} (1 + ||h||)^{N + 1/2}`` and off-transporter magnitude.

    ``K1`` is the band of the analysed function, ``K2`` the window support;
    a sample is outside the transporter set when ``h^T K1`` misses ``K2``.
    """
    x = np.linalg.norm(t.grid.space_points(), axis=-1)
    absW = np.abs(t.coeffs)
    peak = float(absW.max()) if absW.size else 0.0
    fitted = 0.0
    outside = 0.0
    hits = []
    for k, s in enumerate(t.samples):
        inside = sets_intersect(Image(s.h.T, K1), K2)
        hits.append(inside)
        hn = np.linalg.norm(s.h, 2)
        val = float(np.max(absW[k] * (1 + x) ** N)) * (1 + hn) ** (-(N + 0.5))
        fitted = max(fitted, val)
        if not inside:
            outside = max(outside, float(absW[k].max()))
    return {
        "fitted_C": fitted,
        "outside_hits": outside,
        "outside_relative": outside / peak if peak > 0 else 0.0,
        "violations": int(sum(1 for k, s in enumerate(t.samples) if not hits[k] and absW[k].max() > 1e-10 * peak)),
        "peak": peak,
    }


def local_maximum(t: GTransform, radius: float, chart_halfwidth: float) -> np.ndarray:
    """``F#(x, h) = sup |F|`` over the right translate ``(x, h) U``.

    ``U = B_radius(0) x {chart window of half-width chart_halfwidth}``, so the
    spatial window at ``h`` is ``h B_radius``.
    """
    dx = np.array(t.grid.dx)
    if radius < dx.max():
        raise ValueError("unit neighbourhood smaller than one grid cell")
    absF = np.abs(t.coeffs)
    params = sample_params(t.samples)
    out = np.empty_like(absF)
    for j, s in enumerate(t.samples):
        # footprint of h B_r on the spatial lattice
        hb = np.linalg.norm(s.h, 2) * radius
        half = np.minimum(np.ceil(hb / dx).astype(int), np.array(t.grid.n) // 2 - 1)
        offs = np.stack(np.meshgrid(*[np.arange(-m, m + 1) * d for m, d in zip(half, dx)], indexing="ij"), axis=-1)
        pre = offs @ np.linalg.inv(s.h).T
        footprint = np.linalg.norm(pre, axis=-1) <= radius + 1e-12
        near = np.flatnonzero(np.all(np.abs(params - params[j]) <= chart_halfwidth + 1e-12, axis=-1))
        stack = absF[near].max(axis=0)
        out[j] = ndimage.maximum_filter(stack, footprint=footprint, mode="wrap")
    return out


def amalgam_norm(t: GTransform, radius: float, chart_halfwidth: float, spec) -> float:
    """Mixed norm of the local maximum function ``F#_U``."""
    from .norms import mixed_norm

    sharp = replace(t, coeffs=local_maximum(t, radius, chart_halfwidth))
    return mixed_norm(sharp, spec)


def save_transform_manifest(t: GTransform, path) -> None:
    write_json_atomic(path, {"grid": t.grid.to_dict(), "n_samples": len(t.samples),
                             "flagged": int(t.flagged.sum()), "meta": t.meta})

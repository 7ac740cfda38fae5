"""Mixed-norm, coorbit, decomposition, sequence and anisotropic Besov norms."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .bapu import Bapu
from .cover import ModerateWeight
from .group import DilationGroup, is_expansive, modular_G
from .sets import FrequencySet, Image, sets_intersect
from .transform import GTransform, Signal, cwt
from .weights import Weight
from .window import Window


def _exponent(p) -> float:
    p = float(p)
    if not (p >= 1):
        raise ValueError(f"exponent must lie in [1, inf], got {p}")
    return p


def _inv(p: float) -> float:
    return 0.0 if np.isinf(p) else 1.0 / p


def lp_sum(values: np.ndarray, p: float, measure: float | np.ndarray = 1.0, axis=None) -> np.ndarray:
    """``(sum measure |v|^p)^{1/p}``, or ``max |v|`` for ``p = inf``."""
    a = np.abs(values)
    if np.isinf(p):
        return a.max(axis=axis) if a.size else np.zeros(())
    return (np.sum(measure * a ** p, axis=axis)) ** (1.0 / p)


def band_lp(grid, fhat: np.ndarray, p: float, oversample: int | None = None, axes_from: int = 0) -> np.ndarray:
    """``L^p`` norm of the band-limited function with Fourier samples ``fhat``.

    For ``p = inf`` the supremum is read on a spatial grid refined
    ``oversample`` times (zero padding in frequency, default 4); finite ``p``
    use the plain grid sum.
    """
    axes = tuple(range(axes_from, axes_from + grid.dim))
    if not np.isinf(p):
        return lp_sum(grid.to_spatial(fhat, axes_from), p, grid.dx_volume, axis=axes)
    k = 4 if oversample is None else int(oversample)
    if k <= 1:
        return lp_sum(grid.to_spatial(fhat, axes_from), p, axis=axes)
    pad = fhat
    for ax, n in zip(axes, grid.n):
        # insert zeros at the Nyquist split of each FFT-ordered axis
        lo = np.take(pad, np.arange(n // 2), axis=ax)
        hi = np.take(pad, np.arange(n // 2, n), axis=ax)
        shape = list(pad.shape)
        shape[ax] = (k - 1) * n
        pad = np.concatenate([lo, np.zeros(shape, dtype=pad.dtype), hi], axis=ax)
    fine = np.fft.ifftn(pad, axes=axes) * (np.prod(grid.n) * k ** grid.dim * grid.dxi_volume)
    return np.abs(fine).max(axis=axes)


@dataclass(frozen=True)
class NormSpec:
    """Exponents ``p`` (space) and ``q`` (group) in ``[1, inf]`` and a weight ``v0`` on H."""

    p: float = 2.0
    q: float = 2.0
    v: Weight = field(default_factory=Weight)

    def __post_init__(self):
        object.__setattr__(self, "p", _exponent(self.p))
        object.__setattr__(self, "q", _exponent(self.q))

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "weight": self.v.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormSpec":
        return cls(float(d.get("p", 2)), float(d.get("q", 2)), Weight.from_dict(d.get("weight")))


def mixed_norm(F: GTransform, spec: NormSpec, include_flagged: bool = False) -> float:
    """Quadrature ``L^{p,q}_v`` norm: inner ``L^p(dx)``, outer ``L^q(dh / |det h|)``."""
    coeffs = F.coeffs
    if not np.all(np.isfinite(coeffs)):
        raise ValueError("transform contains NaN or Inf")
    keep = np.ones(len(F.samples), dtype=bool) if include_flagged else ~F.flagged
    if not keep.any():
        return 0.0
    vs = np.array([spec.v(s.h) for s in F.samples])[keep]
    axes = tuple(range(1, coeffs.ndim))
    inner = lp_sum(coeffs[keep], spec.p, F.grid.dx_volume, axis=axes) * vs
    outer_w = (F.weights / F.dets)[keep]
    return float(lp_sum(inner, spec.q, outer_w))


def coorbit_norm(f: Signal, w: Window, samples, spec: NormSpec) -> float:
    if w.calderon_constant != 1:
        raise ValueError("window is not Calderon-normalized")
    return mixed_norm(cwt(f, w, samples, warn=False), spec)


def decomposition_norm(f: Signal, b: Bapu, u: ModerateWeight, p: float, q: float) -> dict:
    """``|| (u_i ||F^{-1}(phi_i fhat)||_{L^p})_i ||_{l^q}`` with the lost-mass fraction."""
    p, q = _exponent(p), _exponent(q)
    grid = b.grid
    fhat = f.fhat if f.grid == grid else np.asarray(f.evaluate(grid.points()), dtype=complex)
    idx = list(b.phis)
    local = band_lp(grid, np.stack([b.phis[i] * fhat for i in idx]), p, axes_from=1)
    weights = np.array([u.values[i] for i in idx])
    value = float(lp_sum(local * weights, q))
    total = float(np.sum(np.abs(fhat) ** 2))
    cover = b.partition_sum() > 0
    lost = float(np.sum(np.abs(fhat[~cover]) ** 2) / total) if total > 0 else 0.0
    if lost > 1e-8:
        warnings.warn(f"signal carries {lost:.2e} of its energy outside the cover", stacklevel=2)
    return {"value": value, "lost_mass": lost, "band_norms": dict(zip(idx, local.tolist()))}


@dataclass
class SequenceData:
    """Coefficients on ``X = {(h_j x_k, h_j)}``: ``coeffs[j]`` is an array over the positions of row ``j``."""

    hs: list
    positions: list
    coeffs: list
    spec: NormSpec = field(default_factory=NormSpec)
    params: list | None = None

    def flat(self) -> np.ndarray:
        return np.concatenate([np.ravel(c) for c in self.coeffs]) if self.coeffs else np.zeros(0)

    def like(self, values) -> "SequenceData":
        values = np.asarray(values)
        out, pos = [], 0
        for c in self.coeffs:
            out.append(values[pos:pos + len(c)])
            pos += len(c)
        return SequenceData(self.hs, self.positions, out, self.spec, self.params)

    def __add__(self, other: "SequenceData") -> "SequenceData":
        return self.like(self.flat() + other.flat())

    def scaled(self, s) -> "SequenceData":
        return self.like(s * self.flat())


def sequence_norm(sd: SequenceData) -> float:
    """``(sum_j (sum_k (|c_jk| v(h_j) |det h_j|^{1/p - 1/q})^p)^{q/p})^{1/q}``.

    This equals the mixed norm of ``sum |c_i| 1_{x_i U}`` when the unit
    neighbourhood ``U`` has unit spatial volume and unit Haar mass.
    """
    p, q, v = sd.spec.p, sd.spec.q, sd.spec.v
    rows = []
    for h, c in zip(sd.hs, sd.coeffs):
        det = abs(np.linalg.det(np.atleast_2d(h)))
        scale = v(h) * det ** (_inv(p) - _inv(q))
        rows.append(float(lp_sum(np.asarray(c), p)) * scale)
    return float(lp_sum(np.array(rows), q)) if rows else 0.0


def control_weight(v0: Weight, s: float, p: float, q: float, g: DilationGroup, h) -> float:
    """Closed-form control weight on ``H`` for ``L^{p,q}_v``; ``1/inf = 0``."""
    h = np.atleast_2d(np.asarray(h, dtype=float))
    hi = np.linalg.inv(h)
    det = abs(np.linalg.det(h))
    dG = modular_G(g, h)
    ip, iq = _inv(_exponent(p)), _inv(_exponent(q))
    return float(
        (v0(h) + v0(hi))
        * max(dG ** (-iq), dG ** (iq - 1))
        * (det ** (iq - ip) + det ** (ip - iq))
        * (1 + np.abs(h).sum(axis=1).max() + np.abs(hi).sum(axis=1).max()) ** s
    )


def besov_bands(A, support: FrequencySet, band: FrequencySet, j_max: int = 200) -> list[int]:
    """Indices ``j`` with ``(A^T)^j supp phi_hat`` meeting the signal band."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    At = A.T
    out = []
    for j in range(-j_max, j_max + 1):
        M = np.linalg.matrix_power(At, j) if j >= 0 else np.linalg.matrix_power(np.linalg.inv(At), -j)
        if sets_intersect(Image(M, support), band):
            out.append(j)
    return out


def besov_norm(f: Signal, A, alpha: float, p: float, q: float, phi: Window, probe=None) -> dict:
    """``|| (|det A|^{j alpha} ||F^{-1}(fhat phi_hat((A^T)^{-j} .))||_{L^p})_j ||_{l^q}``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    p, q = _exponent(p), _exponent(q)
    if not is_expansive(A):
        raise ValueError("A is not expansive")
    lo, hi = phi.support.bbox()
    if np.any(lo < -1 - 1e-12) or np.any(hi > 1 + 1e-12):
        raise ValueError("phi_hat must be supported in [-1, 1]^d")
    if np.any(np.abs(phi.evaluate(np.zeros((1, f.grid.dim)))) > 0):
        raise ValueError("phi_hat must vanish near the origin")
    grid = f.grid
    pts = grid.points()
    js = besov_bands(A, phi.support, f.band_support)
    detA = abs(np.linalg.det(A))
    Ait = np.linalg.inv(A.T)
    if probe is not None:
        probe = np.asarray(probe, dtype=float).reshape(-1, grid.dim)
        cover = sum(np.abs(phi.evaluate(probe @ np.linalg.matrix_power(Ait, j).T)) for j in js)
        if np.any(cover <= 0):
            raise ValueError("phi_hat dilates do not cover the probe points")
    vals = []
    total = float(np.sum(np.abs(f.fhat) ** 2))
    covered = np.zeros(grid.shape)
    for j in js:
        M = np.linalg.matrix_power(Ait, j) if j >= 0 else np.linalg.matrix_power(A.T, -j)
        pj = phi.evaluate(pts @ M.T)
        covered += np.abs(pj)
        vals.append(detA ** (j * alpha) * float(band_lp(grid, f.fhat * pj, p)))
    lost = float(np.sum(np.abs(f.fhat[covered == 0]) ** 2) / total) if total > 0 else 0.0
    return {"value": float(lp_sum(np.array(vals), q)) if vals else 0.0, "bands": js, "lost_mass": lost}


def check_normalizer(g: DilationGroup, gd, samples, tol: float = 1e-8) -> bool:
    gd = np.atleast_2d(np.asarray(gd, dtype=float))
    gi = np.linalg.inv(gd)
    return all(g.chart_of(gi @ s.h @ gd, tol) is not None for s in samples)


def norm_dilation_covariance(f: Signal, g_dilate, w: Window, samples, spec: NormSpec,
                             group: DilationGroup | None = None) -> dict:
    """Coorbit norm of ``pi(0, g) f`` under ``v`` against that of ``f`` under ``v_g = v(g . g^{-1})``."""
    gd = np.atleast_2d(np.asarray(g_dilate, dtype=float))
    if group is not None and not check_normalizer(group, gd, samples):
        raise ValueError("g is not in the numerical normalizer of the sampled group")
    lhs = coorbit_norm(f.dilated(gd), w, samples, spec)
    spec_g = NormSpec(spec.p, spec.q, spec.v.conjugated(gd))
    rhs = coorbit_norm(f, w, samples, spec_g)
    return {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else float("nan")}


def generalized_holder(F1: GTransform, F2: GTransform, spec: NormSpec) -> tuple[float, float]:
    """``|sum F1 F2 dmu_G|`` and the product of the dual mixed norms."""
    pp = 1.0 / (1.0 - _inv(spec.p)) if spec.p > 1 else np.inf
    qq = 1.0 / (1.0 - _inv(spec.q)) if spec.q > 1 else np.inf
    dual = NormSpec(pp, qq, Weight(-spec.v.det_power, -spec.v.norm_power))
    mass = (F1.weights / F1.dets)[:, None] * F1.grid.dx_volume
    lhs = float(np.abs(np.sum(mass * (F1.coeffs * F2.coeffs).reshape(len(F1.samples), -1))))
    return lhs, mixed_norm(F1, spec, True) * mixed_norm(F2, dual, True)


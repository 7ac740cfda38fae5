"""Dilation groups H <= GL(d, R): charts, Haar quadrature, dual action and admissibility probes."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .sets import (
    Annulus,
    EssentialSupport,
    FrequencySet,
    Image,
    sets_intersect,
)

EIG_TOL = 1e-10
KINDS = ("one_parameter", "cyclic", "similitude", "diag2param", "explicit")


def as_matrix(h, dim: int | None = None) -> np.ndarray:
    m = np.atleast_2d(np.asarray(h, dtype=float))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise ValueError(f"dimension mismatch: matrix is {m.shape[0]}x{m.shape[0]}, expected {dim}")
    return m


def dual_action(h, xi) -> np.ndarray:
    """``h^T xi``, vectorised over leading axes of ``xi``."""
    m = as_matrix(h)
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != m.shape[0]:
        raise ValueError(f"dimension mismatch: point has {xi.shape[-1]} coordinates, matrix is {m.shape[0]}x{m.shape[0]}")
    # row-vector form of h^T xi
    return xi @ m


@dataclass(frozen=True)
class GroupSample:
    h: np.ndarray
    param: tuple[float, ...]
    weight: float

    @property
    def det(self) -> float:
        return float(abs(np.linalg.det(self.h)))


@dataclass(frozen=True, eq=False)
class DilationGroup:
    """A parameterised matrix group.

    Charts (all Haar measures are Lebesgue/counting measure in these
    coordinates, the groups being abelian):

    * ``one_parameter``: ``t -> expm(t A)``
    * ``cyclic``: ``j -> A**j`` (integers)
    * ``similitude``: ``s -> exp(s) I_d`` (log-scale chart, Haar ``ds = dt/t``)
    * ``diag2param``: ``(s, t) -> diag(e^s, e^t, e^(alpha s + beta t))``
    * ``explicit``: a fixed list of ``(matrix, weight)``; the chart is the list index
    """

    kind: str
    dim: int
    matrix: np.ndarray | None = None
    alpha: float = 0.0
    beta: float = 0.0
    elements: tuple = ()
    _inv: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.kind in ("one_parameter", "cyclic"):
            m = as_matrix(self.matrix, self.dim)
            if abs(np.linalg.det(m)) <= 1e-12 * max(1.0, np.abs(m).max() ** self.dim):
                raise ValueError("generator must be invertible")
            object.__setattr__(self, "matrix", m)
            object.__setattr__(self, "_inv", np.linalg.inv(m))
        if self.kind == "diag2param" and self.dim != 3:
            raise ValueError("diag2param groups live in dimension 3")
        if self.kind == "explicit":
            els = tuple((as_matrix(m, self.dim), float(w)) for m, w in self.elements)
            if not els or any(w <= 0 for _, w in els):
                raise ValueError("explicit groups need a nonempty list with positive weights")
            object.__setattr__(self, "elements", els)

    @classmethod
    def one_parameter(cls, A) -> "DilationGroup":
        A = as_matrix(A)
        return cls("one_parameter", A.shape[0], A)

    @classmethod
    def cyclic(cls, A) -> "DilationGroup":
        A = as_matrix(A)
        return cls("cyclic", A.shape[0], A)

    @classmethod
    def similitude(cls, dim: int) -> "DilationGroup":
        return cls("similitude", int(dim))

    @classmethod
    def diag_two_param(cls, alpha: float, beta: float) -> "DilationGroup":
        return cls("diag2param", 3, alpha=float(alpha), beta=float(beta))

    @classmethod
    def explicit(cls, elements) -> "DilationGroup":
        elements = list(elements)
        return cls("explicit", as_matrix(elements[0][0]).shape[0], elements=tuple(elements))

    @property
    def chart_dim(self) -> int:
        return 2 if self.kind == "diag2param" else 1

    @property
    def is_lattice_chart(self) -> bool:
        return self.kind != "explicit"

    def element(self, param) -> np.ndarray:
        p = np.atleast_1d(np.asarray(param, dtype=float))
        if self.kind == "one_parameter":
            return expm(p[0] * self.matrix)
        if self.kind == "similitude":
            return np.exp(p[0]) * np.eye(self.dim)
        if self.kind == "cyclic":
            j = int(round(p[0]))
            if abs(j - p[0]) > 1e-9:
                raise ValueError("cyclic chart takes integer parameters")
            base = self.matrix if j >= 0 else self._inv
            return np.linalg.matrix_power(base, abs(j))
        if self.kind == "diag2param":
            s, t = p[0], p[1]
            return np.diag([np.exp(s), np.exp(t), np.exp(self.alpha * s + self.beta * t)])
        j = int(round(p[0]))
        return self.elements[j][0]

    def chart_of(self, h, tol: float = 1e-8) -> tuple[float, ...] | None:
        """Chart coordinate of ``h`` if it lies in the group (numerically), else None."""
        h = as_matrix(h, self.dim)
        det = abs(np.linalg.det(h))
        if det <= 0:
            return None
        if self.kind == "similitude":
            c = h[0, 0]
            param = (float(np.log(c)),) if c > 0 else None
        elif self.kind == "one_parameter":
            tr = np.trace(self.matrix)
            if abs(tr) < 1e-12:
                return None
            param = (float(np.log(det) / tr),)
        elif self.kind == "cyclic":
            ld = np.log(abs(np.linalg.det(self.matrix)))
            if abs(ld) < 1e-12:
                return None
            param = (float(round(np.log(det) / ld)),)
        elif self.kind == "diag2param":
            if h[0, 0] <= 0 or h[1, 1] <= 0:
                return None
            param = (float(np.log(h[0, 0])), float(np.log(h[1, 1])))
        else:
            dists = [np.abs(m - h).max() for m, _ in self.elements]
            param = (float(np.argmin(dists)),)
        if param is None:
            return None
        ref = self.element(param)
        if np.abs(ref - h).max() <= tol * max(1.0, np.abs(h).max()):
            return param
        return None

    def essential_support(self) -> EssentialSupport:
        if self.kind == "diag2param":
            if abs(self.alpha) <= 1e-12:
                return EssentialSupport(3, ((0,), (1, 2)))
            if abs(self.beta) <= 1e-12:
                return EssentialSupport(3, ((1,), (0, 2)))
        return EssentialSupport.punctured(self.dim)

    def to_config(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim}
        if self.matrix is not None:
            out["matrix"] = self.matrix.tolist()
        if self.kind == "diag2param":
            out.update(alpha=self.alpha, beta=self.beta)
        if self.kind == "explicit":
            out["elements"] = [{"matrix": m.tolist(), "weight": w} for m, w in self.elements]
        return out

    @classmethod
    def from_config(cls, cfg: dict) -> "DilationGroup":
        if not isinstance(cfg, dict) or "kind" not in cfg:
            raise ValueError("group config needs a 'kind'")
        kind = cfg["kind"]
        if kind in ("one_parameter", "cyclic"):
            if "matrix" not in cfg:
                raise ValueError(f"{kind} group config needs 'matrix'")
            A = as_matrix(cfg["matrix"])
            if "dim" in cfg and int(cfg["dim"]) != A.shape[0]:
                raise ValueError("'dim' does not match matrix size")
            return cls(kind, A.shape[0], A)
        if kind == "similitude":
            return cls.similitude(int(cfg.get("dim", 1)))
        if kind == "diag2param":
            return cls.diag_two_param(float(cfg["alpha"]), float(cfg["beta"]))
        if kind == "explicit":
            return cls.explicit([(e["matrix"], e["weight"]) for e in cfg["elements"]])
        raise ValueError(f"unknown group kind {kind!r}")


def _trapezoid(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    if hi < lo:
        raise ValueError("extent must satisfy lo <= hi")
    if n == 1:
        return np.array([(lo + hi) / 2]), np.array([hi - lo])
    t = np.linspace(lo, hi, n)
    w = np.full(n, (hi - lo) / (n - 1))
    w[[0, -1]] /= 2
    return t, w


def haar_samples(g: DilationGroup, extent=None, n=None) -> list[GroupSample]:
    """Haar quadrature nodes on a window of the group chart.

    Continuous charts use the trapezoid rule on a uniform lattice, cyclic
    groups the counting measure on an integer range.
    """
    if g.kind == "explicit":
        return [GroupSample(m, (float(i),), w) for i, (m, w) in enumerate(g.elements)]
    if extent is None:
        raise ValueError(f"{g.kind} groups need an extent")
    if g.kind == "cyclic":
        lo, hi = extent
        if abs(lo - round(lo)) > 1e-9 or abs(hi - round(hi)) > 1e-9:
            raise ValueError("cyclic extent must be an integer range")
        return [GroupSample(g.element(j), (float(j),), 1.0) for j in range(int(round(lo)), int(round(hi)) + 1)]
    if n is None or np.any(np.atleast_1d(n) < 1):
        raise ValueError("need n >= 1 samples")
    if g.kind == "diag2param":
        ext = np.asarray(extent, dtype=float)
        if ext.shape != (2, 2):
            raise ValueError("diag2param extent is ((s_lo, s_hi), (t_lo, t_hi))")
        n1, n2 = (int(n), int(n)) if np.isscalar(n) else (int(n[0]), int(n[1]))
        s, ws = _trapezoid(ext[0, 0], ext[0, 1], n1)
        t, wt = _trapezoid(ext[1, 0], ext[1, 1], n2)
        return [
            GroupSample(g.element((a, b)), (float(a), float(b)), float(wa * wb))
            for a, wa in zip(s, ws)
            for b, wb in zip(t, wt)
        ]
    lo, hi = (float(v) for v in extent)
    t, w = _trapezoid(lo, hi, int(n))
    return [GroupSample(g.element(v), (float(v),), float(wv)) for v, wv in zip(t, w)]


def sample_params(samples) -> np.ndarray:
    return np.array([s.param for s in samples], dtype=float).reshape(len(samples), -1)


def modular_G(g: DilationGroup, h) -> float:
    """Modular function of R^d x| H at (x, h); the built-in groups are unimodular."""
    h = as_matrix(h, g.dim)
    return 1.0 / abs(np.linalg.det(h))


def _eigvals(A) -> np.ndarray:
    try:
        return np.linalg.eigvals(as_matrix(A))
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigenvalue computation failed: {exc}") from exc


def is_integrably_admissible_one_parameter(A, tol: float = EIG_TOL) -> bool:
    """exp(R A) is integrably admissible iff all Re(lambda) > 0 or all < 0."""
    re = _eigvals(A).real
    if np.any(np.abs(re) <= 10 * tol) and np.any(np.abs(re) > 0):
        warnings.warn("eigenvalue real part within tolerance of zero; treated as not admissible", stacklevel=2)
    return bool(np.all(re > tol) or np.all(re < -tol))


def is_expansive(A, tol: float = EIG_TOL) -> bool:
    mod = np.abs(_eigvals(A))
    if np.any(np.abs(mod - 1) <= 10 * tol):
        warnings.warn("eigenvalue modulus within tolerance of one", stacklevel=2)
    return bool(np.all(mod > 1 + tol))


def is_integrably_admissible_two_param(alpha: float, beta: float) -> bool:
    return bool(abs(alpha * beta) <= 1e-12 and alpha + beta > 0)


@dataclass
class TransporterReport:
    hits: list
    bounded: bool
    param_radius: float

    def to_dict(self) -> dict:
        return {"hits": [list(h) for h in self.hits], "bounded": self.bounded, "param_radius": self.param_radius}


def transporter_probe(g: DilationGroup, K1: FrequencySet, K2: FrequencySet, samples) -> TransporterReport:
    """Sampled transporter set ``{h : h^T K1 meets K2}``.

    ``bounded`` is False when a hit falls in the outer 10% of the sampled
    chart window, i.e. the set may extend beyond what was probed.
    """
    if not samples:
        raise ValueError("empty sample list")
    params = sample_params(samples)
    hit_rows = [i for i, s in enumerate(samples) if sets_intersect(Image(s.h.T, K1), K2)]
    lo, hi = params.min(axis=0), params.max(axis=0)
    margin = 0.1 * (hi - lo)
    bounded = True
    for i in hit_rows:
        p = params[i]
        if np.any((margin > 0) & ((p < lo + margin) | (p > hi - margin))):
            bounded = False
            break
    hits = [samples[i].param for i in hit_rows]
    radius = float(max((np.linalg.norm(params[i]) for i in hit_rows), default=0.0))
    return TransporterReport(hits, bounded, radius)


@dataclass
class OrbitCoverage:
    covered_fraction: float
    witnesses: dict

    def to_dict(self) -> dict:
        return {"covered_fraction": self.covered_fraction, "n_witnessed": len(self.witnesses)}


def orbit_covers(g: DilationGroup, C: FrequencySet, region, samples) -> OrbitCoverage:
    """Fraction of ``region`` points lying in ``h^T C`` for some sampled ``h``."""
    pts = np.asarray(region, dtype=float).reshape(-1, g.dim)
    witness = np.full(len(pts), -1)
    for k, s in enumerate(samples):
        todo = witness < 0
        if not todo.any():
            break
        # xi in h^T C  <=>  h^{-T} xi in C
        back = pts[todo] @ np.linalg.inv(s.h)
        inside = C.contains(back)
        idx = np.flatnonzero(todo)[inside]
        witness[idx] = k
    found = np.flatnonzero(witness >= 0)
    return OrbitCoverage(
        float(len(found) / len(pts)) if len(pts) else 0.0,
        {int(i): samples[witness[i]].param for i in found},
    )


def default_base_set(g: DilationGroup) -> FrequencySet:
    """A compact C with H^T C covering the essential support, for the built-in kinds."""
    if g.kind == "cyclic":
        r = float(np.max(np.abs(_eigvals(g.matrix))))
        r = r if r > 1 else 1.0 / float(np.min(np.abs(_eigvals(g.matrix))))
        return Annulus(1.0, max(r, 2.0) * 1.5, g.dim)
    return Annulus(1.0, 2.0, g.dim)

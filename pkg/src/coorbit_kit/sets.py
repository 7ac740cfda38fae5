"""Compact frequency sets: boxes, annuli, linear images and unions.

Membership is vectorised over trailing-axis point arrays.  Intersection tests
are exact for one-dimensional sets (finite unions of intervals) and for annuli
under similitudes; anything else falls back to membership sampling on a
64-per-axis subgrid of the bounding box, which can miss thin overlaps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SUBGRID = 64
_TOL = 1e-12


class FrequencySet:
    dim: int

    def contains(self, points, strict: bool = False) -> np.ndarray:
        raise NotImplementedError

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def enlarged(self, margin: float) -> "FrequencySet":
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def image(self, matrix) -> "Image":
        return Image(np.asarray(matrix, dtype=float), self)

    @staticmethod
    def from_dict(d: dict) -> "FrequencySet":
        kind = d["kind"].lower()
        if kind == "box":
            return Box(tuple(np.atleast_1d(d["lo"]).tolist()), tuple(np.atleast_1d(d["hi"]).tolist()))
        if kind == "annulus":
            return Annulus(float(d["r_inner"]), float(d["r_outer"]), int(d.get("dim", 1)))
        if kind == "image":
            return Image(np.asarray(d["matrix"], dtype=float), FrequencySet.from_dict(d["base"]))
        if kind == "union":
            return Union(tuple(FrequencySet.from_dict(p) for p in d["parts"]))
        raise ValueError(f"unknown frequency set kind {d['kind']!r}")


def _pts(points, dim):
    p = np.asarray(points, dtype=float)
    if p.shape[-1] != dim:
        if dim == 1 and p.ndim <= 1:
            return p[..., None]
        raise ValueError(f"points have dimension {p.shape[-1]}, set has dimension {dim}")
    return p


@dataclass(frozen=True)
class Box(FrequencySet):
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise ValueError("lo and hi must have equal length")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError("box must have nonempty interior")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, points, strict=False):
        p = _pts(points, self.dim)
        lo, hi = np.array(self.lo), np.array(self.hi)
        if strict:
            return np.all((p > lo) & (p < hi), axis=-1)
        return np.all((p >= lo - _TOL) & (p <= hi + _TOL), axis=-1)

    def bbox(self):
        return np.array(self.lo), np.array(self.hi)

    def enlarged(self, margin):
        return Box(tuple(v - margin for v in self.lo), tuple(v + margin for v in self.hi))

    def to_dict(self):
        return {"kind": "box", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class Annulus(FrequencySet):
    """``{xi : r_inner <= |xi| <= r_outer}``; in one dimension a symmetric pair of intervals."""

    r_inner: float
    r_outer: float
    dim: int = 1

    def __post_init__(self):
        if not 0 <= self.r_inner < self.r_outer:
            raise ValueError("annulus needs 0 <= r_inner < r_outer")

    def contains(self, points, strict=False):
        r = np.linalg.norm(_pts(points, self.dim), axis=-1)
        if strict:
            return (r > self.r_inner) & (r < self.r_outer)
        return (r >= self.r_inner - _TOL) & (r <= self.r_outer + _TOL)

    def bbox(self):
        return np.full(self.dim, -self.r_outer), np.full(self.dim, self.r_outer)

    def enlarged(self, margin):
        return Annulus(max(self.r_inner - margin, 0.0), self.r_outer + margin, self.dim)

    def to_dict(self):
        return {"kind": "annulus", "r_inner": self.r_inner, "r_outer": self.r_outer, "dim": self.dim}


@dataclass(frozen=True, eq=False)
class Image(FrequencySet):
    """``matrix @ base``."""

    matrix: np.ndarray
    base: FrequencySet
    _inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if m.shape != (self.base.dim, self.base.dim):
            raise ValueError("matrix shape does not match base set dimension")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_inv", np.linalg.inv(m))

    @property
    def dim(self) -> int:
        return self.base.dim

    def contains(self, points, strict=False):
        p = _pts(points, self.dim)
        return self.base.contains(p @ self._inv.T, strict)

    def bbox(self):
        lo, hi = self.base.bbox()
        corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(self.dim, -1).T
        img = corners @ self.matrix.T
        return img.min(axis=0), img.max(axis=0)

    def enlarged(self, margin):
        return Image(self.matrix, self.base.enlarged(margin))

    def to_dict(self):
        return {"kind": "image", "matrix": self.matrix.tolist(), "base": self.base.to_dict()}


@dataclass(frozen=True)
class Union(FrequencySet):
    parts: tuple[FrequencySet, ...]

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("empty union")
        if len({p.dim for p in parts}) != 1:
            raise ValueError("union parts differ in dimension")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    def contains(self, points, strict=False):
        out = self.parts[0].contains(points, strict)
        for p in self.parts[1:]:
            out = out | p.contains(points, strict)
        return out

    def bbox(self):
        boxes = [p.bbox() for p in self.parts]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)

    def enlarged(self, margin):
        return Union(tuple(p.enlarged(margin) for p in self.parts))

    def to_dict(self):
        return {"kind": "union", "parts": [p.to_dict() for p in self.parts]}


def intervals_1d(s: FrequencySet) -> list[tuple[float, float]] | None:
    """Exact interval decomposition of a one-dimensional set."""
    if s.dim != 1:
        return None
    if isinstance(s, Box):
        return [(s.lo[0], s.hi[0])]
    if isinstance(s, Annulus):
        if s.r_inner == 0:
            return [(-s.r_outer, s.r_outer)]
        return [(-s.r_outer, -s.r_inner), (s.r_inner, s.r_outer)]
    if isinstance(s, Image):
        base = intervals_1d(s.base)
        if base is None:
            return None
        m = float(s.matrix[0, 0])
        return [tuple(sorted((m * a, m * b))) for a, b in base]
    if isinstance(s, Union):
        out = []
        for p in s.parts:
            iv = intervals_1d(p)
            if iv is None:
                return None
            out.extend(iv)
        return out
    return None


def _similitude_factor(m: np.ndarray) -> float | None:
    c2 = float(np.abs(np.linalg.det(m))) ** (2.0 / m.shape[0])
    if np.allclose(m @ m.T, c2 * np.eye(m.shape[0]), rtol=1e-10, atol=1e-12 * max(c2, 1.0)):
        return float(np.sqrt(c2))
    return None


def radial_shell(s: FrequencySet) -> tuple[float, float] | None:
    """``(r_in, r_out)`` if ``s`` is an annulus, possibly moved by similitudes."""
    if isinstance(s, Annulus):
        return s.r_inner, s.r_outer
    if isinstance(s, Image):
        inner = radial_shell(s.base)
        c = _similitude_factor(s.matrix)
        if inner is None or c is None:
            return None
        return inner[0] * c, inner[1] * c
    return None


def _overlap(a, b, strict):
    lo, hi = max(a[0], b[0]), min(a[1], b[1])
    if strict:
        return lo < hi - _TOL * max(1.0, abs(hi))
    return lo <= hi + _TOL * max(1.0, abs(hi))


def sets_intersect(a: FrequencySet, b: FrequencySet, strict: bool = False) -> bool:
    """Whether ``a`` and ``b`` meet.  ``strict`` compares interiors (open sets)."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    ia, ib = intervals_1d(a), intervals_1d(b)
    if ia is not None and ib is not None:
        return any(_overlap(x, y, strict) for x in ia for y in ib)
    ra, rb = radial_shell(a), radial_shell(b)
    if ra is not None and rb is not None:
        return _overlap(ra, rb, strict)
    if isinstance(a, Union):
        return any(sets_intersect(p, b, strict) for p in a.parts)
    if isinstance(b, Union):
        return any(sets_intersect(a, p, strict) for p in b.parts)
    alo, ahi = a.bbox()
    blo, bhi = b.bbox()
    if np.any(np.maximum(alo, blo) > np.minimum(ahi, bhi) + _TOL):
        return False
    return bool(np.any(b.contains(sample_points(a, strict=strict), strict)))


def sample_points(s: FrequencySet, n: int = SUBGRID, strict: bool = False) -> np.ndarray:
    """Points of ``s`` on an ``n``-per-axis subgrid of its bounding box."""
    lo, hi = s.bbox()
    axes = [np.linspace(a, b, n) for a, b in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, s.dim)
    return pts[s.contains(pts, strict)]


@dataclass(frozen=True)
class EssentialSupport:
    """Open co-null set given as the complement of coordinate subspaces.

    Each entry of ``removed`` lists coordinates that vanish on one removed
    subspace; ``((0, ..., d-1),)`` is the punctured space.
    """

    dim: int
    removed: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        removed = self.removed or (tuple(range(self.dim)),)
        object.__setattr__(self, "removed", tuple(tuple(r) for r in removed))

    @classmethod
    def punctured(cls, dim: int) -> "EssentialSupport":
        return cls(dim, (tuple(range(dim)),))

    def distance(self, points) -> np.ndarray:
        """Distance of each point to the complement."""
        p = _pts(points, self.dim)
        return np.min([np.linalg.norm(p[..., list(r)], axis=-1) for r in self.removed], axis=0)

    def contains(self, points) -> np.ndarray:
        return self.distance(points) > 0

    def set_distance(self, s: FrequencySet) -> float:
        """Distance from a compact set to the complement (exact for boxes and annuli)."""
        if isinstance(s, Union):
            return min(self.set_distance(p) for p in s.parts)
        if isinstance(s, Box):
            lo, hi = np.array(s.lo), np.array(s.hi)
            gap = np.where(lo > 0, lo, np.where(hi < 0, -hi, 0.0))
            return float(min(np.linalg.norm(gap[list(r)]) for r in self.removed))
        shell = radial_shell(s)
        if shell is not None and self.removed == (tuple(range(self.dim)),):
            return float(shell[0])
        iv = intervals_1d(s)
        if iv is not None:
            return float(min(0.0 if a <= 0 <= b else min(abs(a), abs(b)) for a, b in iv))
        pts = sample_points(s)
        if pts.size == 0:
            return 0.0
        return float(self.distance(pts).min())

    def to_dict(self) -> dict:
        return {"dim": self.dim, "removed": [list(r) for r in self.removed]}

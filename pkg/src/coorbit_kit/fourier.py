"""Frequency grids, the Fourier convention, and the raw sample container.

Convention: the forward transform uses the kernel ``exp(-2 pi i <x, xi>)``,

    fhat(xi) = int f(x) exp(-2 pi i <x, xi>) dx,
    f(x)     = int fhat(xi) exp(2 pi i <x, xi>) dxi.

A :class:`FreqGrid` with ``n`` points and spacing ``dxi`` per axis is paired
with a periodic spatial grid of spacing ``dx = 1 / (n * dxi)``.  Both grids are
stored in FFT order (index ``k`` sits at ``k * step`` for ``k < n/2`` and at
``(k - n) * step`` otherwise), so that

    f(x_m)     = prod(n * dxi) * ifftn(fhat)[m]
    fhat(xi_k) = prod(dx) * fftn(f)[k]

and Parseval reads ``sum |f|^2 dx = sum |fhat|^2 dxi`` exactly.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class FreqGrid:
    """Regular frequency grid in FFT order, with its dual spatial grid."""

    n: tuple[int, ...]
    spacing: tuple[float, ...]
    offset: tuple[float, ...] | None = None

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        spacing = tuple(float(v) for v in np.atleast_1d(self.spacing))
        if len(spacing) == 1 and len(n) > 1:
            spacing = spacing * len(n)
        if len(n) == 1 and len(spacing) > 1:
            n = n * len(spacing)
        offset = self.offset
        offset = (0.0,) * len(n) if offset is None else tuple(float(v) for v in np.atleast_1d(offset))
        if len(offset) == 1 and len(n) > 1:
            offset = offset * len(n)
        if not (len(n) == len(spacing) == len(offset)):
            raise ValueError("n, spacing and offset must have one entry per axis")
        if len(n) not in (1, 2, 3):
            raise ValueError(f"dimension {len(n)} not supported (expected 1, 2 or 3)")
        for v in n:
            if v < 8 or v & (v - 1):
                raise ValueError(f"points per axis must be a power of two >= 8, got {v}")
        if any(s <= 0 for s in spacing):
            raise ValueError("frequency spacing must be positive")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "offset", offset)

    @classmethod
    def regular(cls, dim: int, n: int, spacing: float) -> "FreqGrid":
        return cls((n,) * dim, (spacing,) * dim)

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple(1.0 / (k * s) for k, s in zip(self.n, self.spacing))

    @property
    def period(self) -> tuple[float, ...]:
        return tuple(1.0 / s for s in self.spacing)

    @property
    def dxi_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def dx_volume(self) -> float:
        return float(np.prod(self.dx))

    def freq_axes(self) -> list[np.ndarray]:
        return [o + np.fft.fftfreq(k, d) for k, d, o in zip(self.n, self.dx, self.offset)]

    def space_axes(self) -> list[np.ndarray]:
        return [np.fft.fftfreq(k, s) for k, s in zip(self.n, self.spacing)]

    def points(self) -> np.ndarray:
        """Frequency points, shape ``(*n, d)``."""
        return np.stack(np.meshgrid(*self.freq_axes(), indexing="ij"), axis=-1)

    def space_points(self) -> np.ndarray:
        """Spatial points, shape ``(*n, d)``, centred on the origin."""
        return np.stack(np.meshgrid(*self.space_axes(), indexing="ij"), axis=-1)

    def extent(self) -> tuple[np.ndarray, np.ndarray]:
        """Closed box spanned by the frequency samples."""
        lo = np.array([o - (k // 2) * s for k, s, o in zip(self.n, self.spacing, self.offset)])
        hi = np.array([o + (k // 2 - 1) * s for k, s, o in zip(self.n, self.spacing, self.offset)])
        return lo, hi

    def refine(self) -> "FreqGrid":
        """Twice the points at half the frequency spacing (same ``dx``)."""
        return FreqGrid(tuple(2 * k for k in self.n), tuple(s / 2 for s in self.spacing), self.offset)

    def _modulation(self) -> np.ndarray | None:
        if not any(self.offset):
            return None
        x = self.space_points()
        return np.exp(2j * np.pi * (x @ np.asarray(self.offset)))

    def to_spatial(self, fhat: np.ndarray, axes_from: int = 0) -> np.ndarray:
        """Samples of ``f`` on the spatial grid from samples of ``fhat``.

        Leading axes before ``axes_from`` are treated as a batch.
        """
        axes = tuple(range(axes_from, axes_from + self.dim))
        f = np.fft.ifftn(fhat, axes=axes) * (np.prod(self.n) * self.dxi_volume)
        mod = self._modulation()
        return f if mod is None else f * mod

    def to_frequency(self, f: np.ndarray, axes_from: int = 0) -> np.ndarray:
        axes = tuple(range(axes_from, axes_from + self.dim))
        mod = self._modulation()
        if mod is not None:
            f = f * np.conj(mod)
        return np.fft.fftn(f, axes=axes) * self.dx_volume

    def to_dict(self) -> dict:
        return {"dim": self.dim, "N": list(self.n), "spacing": list(self.spacing), "offset": list(self.offset)}

    @classmethod
    def from_dict(cls, d: dict) -> "FreqGrid":
        dim = int(d.get("dim", len(np.atleast_1d(d["N"]))))
        n = np.atleast_1d(d["N"]).tolist()
        spacing = np.atleast_1d(d["spacing"]).tolist()
        if len(n) == 1:
            n = n * dim
        if len(spacing) == 1:
            spacing = spacing * dim
        return cls(tuple(n), tuple(spacing), tuple(np.atleast_1d(d.get("offset", [0.0] * dim)).tolist()))


def linear_stencil(grid: FreqGrid, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flat indices and weights of the multilinear interpolation stencil.

    Points outside the sampled box get zero weight.  Returns arrays of shape
    ``(P, 2**d)``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, grid.dim)
    idx = np.zeros((pts.shape[0], 1), dtype=np.int64)
    wts = np.ones((pts.shape[0], 1))
    strides = np.cumprod((1,) + grid.n[::-1])[:-1][::-1]
    for ax in range(grid.dim):
        n, s, o = grid.n[ax], grid.spacing[ax], grid.offset[ax]
        u = (pts[:, ax] - o) / s
        k0 = np.floor(u)
        frac = u - k0
        k0 = k0.astype(np.int64)
        k1 = k0 + 1
        lo, hi = -(n // 2), n // 2 - 1
        ok0 = (k0 >= lo) & (k0 <= hi)
        ok1 = (k1 >= lo) & (k1 <= hi)
        i0 = np.mod(k0, n) * strides[ax]
        i1 = np.mod(k1, n) * strides[ax]
        w0 = np.where(ok0, 1.0 - frac, 0.0)
        w1 = np.where(ok1, frac, 0.0)
        idx = np.concatenate([idx + i0[:, None], idx + i1[:, None]], axis=1)
        wts = np.concatenate([wts * w0[:, None], wts * w1[:, None]], axis=1)
    return idx, wts


def interpolate(grid: FreqGrid, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of grid samples; zero outside the grid box.

    ``values`` may carry leading batch axes in front of the grid axes.
    """
    points = np.asarray(points, dtype=float)
    out_shape = points.shape[:-1]
    idx, wts = linear_stencil(grid, points)
    batch = values.shape[: values.ndim - grid.dim]
    flat = values.reshape(batch + (-1,))
    res = (flat[..., idx] * wts).sum(axis=-1)
    return res.reshape(batch + out_shape)


def write_container(path: str | os.PathLike, header: dict, data: np.ndarray) -> None:
    """JSON header line followed by raw little-endian complex128, row-major.

    The file is written to a temporary name and renamed into place.
    """
    path = Path(path)
    header = dict(header)
    header["dtype"] = "c128"
    header.setdefault("shape", list(data.shape))
    payload = np.ascontiguousarray(data, dtype="<c16").tobytes()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(json.dumps(header).encode())
            fh.write(b"\n")
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_container(path: str | os.PathLike) -> tuple[dict, np.ndarray]:
    raw = Path(path).read_bytes()
    head, _, body = raw.partition(b"\n")
    header = json.loads(head)
    if header.get("dtype") != "c128":
        raise ValueError(f"unsupported dtype {header.get('dtype')!r}")
    data = np.frombuffer(body, dtype="<c16").astype(np.complex128)
    shape = tuple(header.get("shape") or ())
    if shape:
        if int(np.prod(shape)) != data.size:
            raise ValueError("payload size does not match header shape")
        data = data.reshape(shape)
    return header, data


def write_json_atomic(path: str | os.PathLike, obj) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(obj, fh, indent=2, default=_json_default)
    os.replace(tmp, path)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")

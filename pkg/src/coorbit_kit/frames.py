"""Sampling sets {(h_j x_k, h_j)}, analysis/synthesis operators, empirical frame and Riesz bounds."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from .cover import WellSpreadSet
from .fourier import FreqGrid
from .sets import Box
from .norms import NormSpec, SequenceData, coorbit_norm, sequence_norm
from .transform import Signal
from .window import Window


@dataclass(frozen=True, eq=False)
class SamplingSet:
    """Rows ``j`` of positions ``h_j a k`` (``k`` integer) inside the periodic spatial cell.

    ``on_lattice[j]`` records whether the row lands on spatial grid points,
    in which case coefficients come from an exact strided inverse FFT.
    """

    hs: list
    params: list
    a: float
    positions: list
    on_lattice: list
    grid: FreqGrid

    @property
    def size(self) -> int:
        return int(sum(len(p) for p in self.positions))

    def coarsened(self, factor: float) -> "SamplingSet":
        return sampling_set(self.hs, self.params, self.a * factor, self.grid)


def sampling_set(hs, params, a: float, grid: FreqGrid) -> SamplingSet:
    if a <= 0:
        raise ValueError("lattice spacing must be positive")
    L = np.array(grid.period)
    dx = np.array(grid.dx)
    positions, on_lat = [], []
    for h in hs:
        h = np.atleast_2d(h)
        # integer k with h a k inside [-L/2, L/2)
        hinv = np.linalg.inv(h)
        corners = np.array(list(itertools.product(*[(-l / 2, l / 2) for l in L]))) @ hinv.T / a
        kmin = np.floor(corners.min(axis=0)).astype(int)
        kmax = np.ceil(corners.max(axis=0)).astype(int)
        ks = np.stack(np.meshgrid(*[np.arange(lo, hi + 1) for lo, hi in zip(kmin, kmax)], indexing="ij"), -1).reshape(-1, grid.dim)
        x = (ks * a) @ h.T
        keep = np.all((x >= -L / 2 - 1e-12) & (x < L / 2 - 1e-12), axis=-1)
        x = x[keep]
        positions.append(x)
        u = x / dx
        on_lat.append(bool(np.allclose(u, np.round(u), atol=1e-9)))
    return SamplingSet([np.atleast_2d(h) for h in hs], list(params), float(a), positions, on_lat, grid)


def sampling_set_from(ws: WellSpreadSet, a: float, grid: FreqGrid) -> SamplingSet:
    return sampling_set(ws.matrices(), [tuple(p) for p in ws.params], a, grid)


def analysis(f: Signal, w: Window, X: SamplingSet, spec: NormSpec | None = None) -> SequenceData:
    """``c_jk = <f, pi(h_j a k, h_j) psi>``."""
    grid = f.grid
    if grid != X.grid:
        raise ValueError("signal grid differs from the sampling grid")
    pts = grid.points()
    flat_xi = pts.reshape(-1, grid.dim)
    coeffs = []
    for h, x, on in zip(X.hs, X.positions, X.on_lattice):
        det = abs(np.linalg.det(h))
        slice_hat = f.fhat * np.conj(w.evaluate(pts @ h)) * np.sqrt(det)
        if on:
            W = grid.to_spatial(slice_hat)
            idx = np.mod(np.round(x / np.array(grid.dx)).astype(int), np.array(grid.n))
            coeffs.append(W[tuple(idx.T)])
        else:
            # exact trigonometric evaluation of the band-limited slice
            phase = np.exp(2j * np.pi * (x @ flat_xi.T))
            coeffs.append(phase @ slice_hat.reshape(-1) * grid.dxi_volume)
    return SequenceData(X.hs, X.positions, coeffs, spec or NormSpec(), X.params)


def synthesis(sd: SequenceData, w: Window, X: SamplingSet, name: str = "synthesis") -> Signal:
    """``sum c_i pi(x_i) psi`` on the Fourier side."""
    grid = X.grid
    pts = grid.points()
    flat_xi = pts.reshape(-1, grid.dim)
    fhat = np.zeros(grid.shape, dtype=complex)
    for h, x, c, on in zip(X.hs, X.positions, sd.coeffs, X.on_lattice):
        det = abs(np.linalg.det(h))
        if on and not any(grid.offset):
            acc = np.zeros(grid.shape, dtype=complex)
            idx = np.mod(np.round(x / np.array(grid.dx)).astype(int), np.array(grid.n))
            np.add.at(acc, tuple(idx.T), c)
            # sum_k c_k exp(-2 pi i <x_k, xi>) as a forward DFT
            series = np.fft.fftn(acc)
        else:
            series = (np.exp(-2j * np.pi * (x @ flat_xi.T)).T @ c).reshape(grid.shape)
        fhat += np.sqrt(det) * series * w.evaluate(pts @ h)
    lo, hi = [], []
    for h in X.hs:
        b = w.support.image(np.linalg.inv(h).T).bbox()
        lo.append(b[0])
        hi.append(b[1])
    band = Box(tuple(np.min(lo, axis=0)), tuple(np.max(hi, axis=0)))
    return Signal(grid, fhat, band, None, name)


def frame_bounds(suite, w: Window, X: SamplingSet, spec: NormSpec, samples) -> dict:
    """Empirical ``A_hat = min ||c(f)||_{Y_d} / ||f||_Co`` and ``B_hat = max`` over the suite."""
    suite = list(suite)
    if not suite:
        raise ValueError("empty signal suite")
    ratios = []
    for f in suite:
        co = coorbit_norm(f, w, samples, spec)
        if co == 0:
            raise ValueError(f"signal {f.name!r} has zero coorbit norm")
        ratios.append(sequence_norm(analysis(f, w, X, spec)) / co)
    return {"A_hat": float(min(ratios)), "B_hat": float(max(ratios)), "ratios": ratios}


def frame_operator(f: Signal, w: Window, X: SamplingSet) -> Signal:
    return synthesis(analysis(f, w, X), w, X)


def _l2(fhat: np.ndarray, grid: FreqGrid) -> float:
    return float(np.sqrt(np.sum(np.abs(fhat) ** 2) * grid.dxi_volume))


def frame_reconstruct(sd: SequenceData, w: Window, X: SamplingSet, iterations: int = 50,
                      relax: float | None = None, B_hat: float | None = None) -> tuple[Signal, list]:
    """Richardson iteration ``f_{n+1} = f_n + relax (S^* c - S f_n)`` from ``f_0 = relax S^* c``.

    Returns the final iterate and the log of ``||S^* c - S f_n||``.
    Raises ``RuntimeError`` if that residual grows three steps in a row.
    """
    if relax is None:
        if B_hat is None:
            raise ValueError("need relax or B_hat")
        relax = 1.0 / B_hat ** 2
    if relax < 0:
        raise ValueError("relax must be nonnegative")
    grid = X.grid
    target = synthesis(sd, w, X)
    f = Signal(grid, relax * target.fhat, target.band_support, None, "reconstruction")
    log = []
    grows = 0
    for _ in range(iterations + 1):
        Sf = frame_operator(f, w, X)
        r = target.fhat - Sf.fhat
        res = _l2(r, grid)
        if log and res > log[-1] * (1 + 1e-12) and res > 1e-13 * log[0]:
            grows += 1
            if grows >= 3:
                raise RuntimeError("frame iteration diverges: residual grew three consecutive steps")
        else:
            grows = 0
        log.append(res)
        if len(log) > iterations or res == 0:
            break
        f = Signal(grid, f.fhat + relax * r, f.band_support, None, "reconstruction")
    return f, log


def riesz_bounds(coeff_suite, w: Window, X: SamplingSet, spec: NormSpec, samples) -> dict:
    """Empirical ``||sum c_i pi(x_i) psi||_Co / ||c||_{Y_d}`` bracket."""
    ratios = []
    for sd in coeff_suite:
        sn = sequence_norm(sd)
        if sn == 0:
            raise ValueError("zero sequence in suite")
        ratios.append(coorbit_norm(synthesis(sd, w, X), w, samples, spec) / sn)
    if not ratios:
        raise ValueError("empty coefficient suite")
    return {"A_hat": float(min(ratios)), "B_hat": float(max(ratios)), "ratios": ratios}


def write_sequence_csv(path, sd: SequenceData) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        dim = sd.positions[0].shape[-1] if sd.positions else 1
        wr.writerow(["j", "k", "h_param"] + [f"x{d}" for d in range(dim)] + ["re", "im"])
        for j, (x, c) in enumerate(zip(sd.positions, sd.coeffs)):
            par = sd.params[j][0] if sd.params else j
            for k in range(len(c)):
                wr.writerow([j, k, par] + list(np.atleast_1d(x[k])) + [c[k].real, c[k].imag])


def read_sequence_csv(path, hs, spec: NormSpec | None = None) -> SequenceData:
    rows: dict = {}
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        head = next(rd)
        dim = len(head) - 5
        for r in rd:
            j = int(r[0])
            rows.setdefault(j, []).append(([float(v) for v in r[3:3 + dim]], complex(float(r[-2]), float(r[-1])), float(r[2])))
    js = sorted(rows)
    return SequenceData([hs[j] for j in js], [np.array([p for p, _, _ in rows[j]]) for j in js],
                        [np.array([c for _, c, _ in rows[j]]) for j in js], spec or NormSpec(),
                        [(rows[j][0][2],) for j in js])


def write_log_csv(path, log) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["iteration", "residual"])
        for i, r in enumerate(log):
            wr.writerow([i, r])

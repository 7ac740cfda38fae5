"""Partitions of unity ``phi_i(xi) = int_{U_i} |psi_hat(h^T xi)|^2 dmu_H(h)`` subordinate to induced covers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cover import Cover, WellSpreadSet
from .fourier import FreqGrid, write_container, write_json_atomic
from .sets import Annulus, Box, FrequencySet, Image, Union, intervals_1d, radial_shell
from .window import Window

MIN_SAMPLES_ACROSS = 8


@dataclass
class CellPartition:
    cells: dict
    enumeration: list

    def masses(self) -> dict:
        return {i: float(sum(s.weight for s in ss)) for i, ss in self.cells.items()}

    def total_mass(self) -> float:
        return float(sum(self.masses().values()))


def partition_cells(ws: WellSpreadSet, samples, enumeration=None) -> CellPartition:
    """Greedy first-claim assignment of Haar samples to the windows ``h_i U``."""
    order = list(range(ws.size)) if enumeration is None else [int(i) for i in enumeration]
    cells = {i: [] for i in order}
    for s in samples:
        for i in order:
            if ws.window_contains(i, s.param):
                cells[i].append(s)
                break
        else:
            raise ValueError(f"sample at chart coordinate {s.param} lies in no window (density violated)")
    return CellPartition(cells, order)


def base_set(w: Window, ws: WellSpreadSet, cell_samples=None) -> FrequencySet:
    """``Q = U^{-T} supp psi_hat`` for the window's declared support.

    Closed form for radial supports under similitudes and for cyclic groups
    (``U`` is the identity cell); otherwise the union of ``u^{-T} supp psi_hat``
    over the supplied cell samples ``u`` around the identity.
    """
    g = ws.group
    if g.kind == "cyclic":
        return w.support
    half = float(ws.cell[0]) / 2
    shell = radial_shell(w.support)
    if g.kind == "similitude" and shell is not None:
        return Annulus(shell[0] * np.exp(-half), shell[1] * np.exp(half), w.grid.dim)
    ivs = intervals_1d(w.support)
    if g.kind == "similitude" and ivs is not None:
        parts = []
        for a, b in ivs:
            lo = a * np.exp(-half) if a > 0 else a * np.exp(half)
            hi = b * np.exp(half) if b > 0 else b * np.exp(-half)
            parts.append(Box((lo,), (hi,)))
        return parts[0] if len(parts) == 1 else Union(tuple(parts))
    if cell_samples is None:
        raise ValueError("no closed form for this group: pass the identity cell's samples")
    return Union(tuple(Image(np.linalg.inv(s.h).T, w.support) for s in cell_samples))


@dataclass
class Bapu:
    cover: Cover
    window: Window
    grid: FreqGrid
    cells: CellPartition
    phis: dict
    l1_bounds: dict

    @property
    def C_Phi(self) -> float:
        return float(max(self.l1_bounds.values()))

    def partition_sum(self, points=None) -> np.ndarray:
        """``sum_i phi_i``; on the grid, or evaluated exactly at ``points``."""
        if points is None:
            return np.sum(list(self.phis.values()), axis=0)
        pts = np.asarray(points, dtype=float)
        total = np.zeros(pts.shape[:-1])
        for ss in self.cells.cells.values():
            for s in ss:
                total += s.weight * np.abs(self.window.evaluate(pts @ s.h)) ** 2
        return total

    def save(self, out_dir) -> None:
        from pathlib import Path
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for i, phi in self.phis.items():
            header = self.grid.to_dict()
            header["index"] = i
            write_container(out / f"phi_{i}.bin", header, phi.astype(complex))
        write_json_atomic(out / "bapu.json", {
            "indices": list(self.phis), "l1_bounds": {str(k): v for k, v in self.l1_bounds.items()},
            "C_Phi": self.C_Phi, "cover": self.cover.to_dict(),
        })


def _max_run(mask: np.ndarray) -> int:
    """Longest run of True along any single axis line, minimised over axes."""
    best = []
    for ax in range(mask.ndim):
        m = np.moveaxis(mask, ax, -1).reshape(-1, mask.shape[ax])
        # FFT order: roll so the grid is contiguous in frequency
        m = np.roll(m, mask.shape[ax] // 2, axis=-1).astype(int)
        pad = np.pad(m, ((0, 0), (1, 1)))
        d = np.diff(pad, axis=-1)
        starts = np.argwhere(d == 1)
        ends = np.argwhere(d == -1)
        runs = ends[:, 1] - starts[:, 1] if len(starts) else np.array([0])
        best.append(int(runs.max()))
    return min(best)


def l1_norm_inverse_ft(grid: FreqGrid, phi: np.ndarray) -> tuple[float, float]:
    """``||F^{-1} phi||_{L^1}`` on the spatial grid plus a tail estimate beyond it.

    The tail uses a power-law envelope ``C r^{-N}`` fitted on the outer half
    of the radial profile, with ``N`` clipped to at least ``d + 1``.
    """
    f = np.abs(grid.to_spatial(phi))
    body = float(f.sum() * grid.dx_volume)
    r = np.linalg.norm(grid.space_points(), axis=-1)
    R = min(p / 2 for p in grid.period)
    peak = f.max()
    outer = (r > R / 2) & (r <= R)
    if peak == 0 or not outer.any():
        return body, 0.0
    edge_val = float(f[(r > 0.9 * R) & (r <= R)].max()) if np.any((r > 0.9 * R) & (r <= R)) else float(f[outer].max())
    rr, ff = r[outer], f[outer]
    ok = ff > 1e-300
    d = grid.dim
    N = d + 1.0
    if ok.sum() > 4:
        slope = np.polyfit(np.log(rr[ok]), np.log(ff[ok]), 1)[0]
        N = max(-slope, d + 1.0)
    surface = {1: 2.0, 2: 2 * np.pi, 3: 4 * np.pi}[d]
    # int_R^inf edge * (r/R)^{-N} * surface * r^{d-1} dr
    tail = edge_val * surface * R ** d / (N - d)
    return body, float(tail)


def build_bapu(w: Window, cp: CellPartition, c: Cover, grid: FreqGrid | None = None) -> Bapu:
    """Partition functions on ``grid`` from the cell sums of ``|psi_hat(h^T xi)|^2``."""
    if w.calderon_constant != 1:
        raise ValueError("window is not Calderon-normalized")
    grid = grid or w.grid
    pts = grid.points()
    phis, l1 = {}, {}
    members = dict(c.members)
    for i, ss in cp.cells.items():
        if i not in members:
            continue
        phi = np.zeros(grid.shape)
        for s in ss:
            phi += s.weight * np.abs(w.evaluate(pts @ s.h)) ** 2
        if np.any(phi > 0):
            width = _max_run(phi > 0)
            if width < MIN_SAMPLES_ACROSS:
                raise ValueError(f"grid too coarse for member {i}: {width} samples across its support")
        phis[i] = phi
        body, tail = l1_norm_inverse_ft(grid, phi)
        l1[i] = body + tail
    return Bapu(c, w, grid, cp, phis, l1)


def verify_bapu(b: Bapu, probe, tol_defect: float = 1e-3, tol_leak: float = 1e-10) -> dict:
    """Partition defect on probe points, support leakage on the grid, and ``C_Phi``."""
    pts = np.asarray(probe, dtype=float).reshape(-1, b.grid.dim)
    total = b.partition_sum(pts)
    defect = float(np.max(np.abs(total - 1.0))) if len(pts) else 0.0
    in_cover = np.zeros(len(pts), dtype=bool)
    for i in b.phis:
        in_cover |= b.cover.member_set(i).contains(pts)
    gp = b.grid.points()
    scale = max(float(np.max(phi)) for phi in b.phis.values()) or 1.0
    leak = 0.0
    for i, phi in b.phis.items():
        outside = ~b.cover.member_set(i).contains(gp)
        if outside.any():
            leak = max(leak, float(np.max(phi[outside])) / scale)
    return {
        "max_partition_defect": defect,
        "support_leakage": leak,
        "C_Phi": b.C_Phi,
        "out_of_cover_fraction": float(1.0 - in_cover.mean()) if len(pts) else 0.0,
        "pass": bool(defect < tol_defect and leak < tol_leak and np.isfinite(b.C_Phi)),
    }

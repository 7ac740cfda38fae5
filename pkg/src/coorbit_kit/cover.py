"""Well-spread families in H, induced frequency coverings and moderate weights."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .group import DilationGroup
from .sets import EssentialSupport, FrequencySet, Image, sets_intersect
from .weights import Weight

MODERATION_LIMIT = 1e6


@dataclass(frozen=True, eq=False)
class WellSpreadSet:
    """Lattice ``params`` in the group chart with cell ``U`` of half-width ``cell/2`` per axis.

    Windows are half-open, ``[p - cell/2, p + cell/2)``, so that equal step and
    cell width give a disjoint tiling of the chart.
    """

    group: DilationGroup
    params: np.ndarray
    step: np.ndarray
    cell: np.ndarray

    @property
    def size(self) -> int:
        return len(self.params)

    def matrices(self) -> list[np.ndarray]:
        return [self.group.element(p) for p in self.params]

    def window_contains(self, i: int, param) -> bool:
        p = np.atleast_1d(np.asarray(param, dtype=float))
        lo = self.params[i] - self.cell / 2
        hi = self.params[i] + self.cell / 2
        return bool(np.all((p >= lo - 1e-12) & (p < hi - 1e-12)))

    def chart_range(self) -> tuple[np.ndarray, np.ndarray]:
        return self.params.min(axis=0) - self.cell / 2, self.params.max(axis=0) + self.cell / 2

    def to_dict(self) -> dict:
        return {"group": self.group.to_config(), "params": self.params.tolist(),
                "step": self.step.tolist(), "cell": self.cell.tolist()}


def well_spread(g: DilationGroup, chart_range, step=None, cell=None) -> WellSpreadSet:
    """Lattice ``step * Z^k`` restricted to ``chart_range``, with ``U`` one chart cell.

    ``cell`` (default: ``step``) is the width of ``U``; values above ``step``
    give overlapping windows.
    """
    if g.kind == "explicit":
        raise ValueError("explicit groups have no lattice chart")
    k = g.chart_dim
    rng = np.asarray(chart_range, dtype=float).reshape(k, 2) if k > 1 else np.asarray(chart_range, dtype=float).reshape(1, 2)
    if g.kind == "cyclic":
        if step is not None and abs(float(np.atleast_1d(step)[0]) - 1.0) > 1e-12:
            raise ValueError("cyclic charts are integer lattices: step must be 1")
        step = 1.0
    if step is None:
        raise ValueError("step is required")
    step = np.broadcast_to(np.asarray(step, dtype=float), (k,)).copy()
    if np.any(step <= 0):
        raise ValueError("step must be positive")
    cell = step.copy() if cell is None else np.broadcast_to(np.asarray(cell, dtype=float), (k,)).copy()
    if np.any(cell < step - 1e-12):
        raise ValueError("cell narrower than the step: windows would not cover the chart (density fails)")
    axes = []
    for (lo, hi), s in zip(rng, step):
        if hi < lo:
            raise ValueError("chart range must satisfy lo <= hi")
        i0, i1 = int(np.ceil(lo / s - 1e-9)), int(np.floor(hi / s + 1e-9))
        axes.append(np.arange(i0, i1 + 1) * s)
    grids = np.meshgrid(*axes, indexing="ij")
    params = np.stack([a.ravel() for a in grids], axis=-1)
    if len(params) == 0:
        raise ValueError("chart range contains no lattice point")
    ws = WellSpreadSet(g, params, step, cell)
    _check_spread(ws)
    return ws


def _check_spread(ws: WellSpreadSet) -> None:
    # separation: inner halves of the windows are pairwise disjoint
    if len(ws.params) > 1:
        d = np.abs(ws.params[:, None, :] - ws.params[None, :, :])
        np.fill_diagonal(d[..., 0], np.inf)
        if np.any(np.all(d < ws.cell / 2 - 1e-12, axis=-1)):
            raise ValueError("lattice is not separated at half-cell scale")


@dataclass(frozen=True, eq=False)
class Cover:
    """Induced covering ``Q_i = h_i^{-T} Q`` with overlap structure."""

    wellspread: WellSpreadSet
    Q: FrequencySet
    members: list
    neighbors: dict
    edge: frozenset = field(default_factory=frozenset)

    @property
    def N_Q(self) -> int:
        return max(len(v) for v in self.neighbors.values())

    @property
    def indices(self) -> list[int]:
        return [i for i, _ in self.members]

    def member_set(self, i: int) -> FrequencySet:
        return Image(dict(self.members)[i], self.Q)

    def h(self, i: int) -> np.ndarray:
        return self.wellspread.group.element(self.wellspread.params[i])

    def to_dict(self) -> dict:
        return {
            "Q": self.Q.to_dict(),
            "members": [{"index": i, "matrix": m.tolist(), "param": self.wellspread.params[i].tolist()}
                        for i, m in self.members],
            "neighbors": {str(i): v for i, v in self.neighbors.items()},
            "edge": sorted(self.edge),
            "N_Q": self.N_Q,
        }


def induced_cover(ws: WellSpreadSet, Q: FrequencySet, essential: EssentialSupport | None = None,
                  indices=None) -> Cover:
    """Members ``h_i^{-T} Q`` with neighbour lists from open-set intersection tests."""
    essential = essential or ws.group.essential_support()
    if essential.set_distance(Q) <= 0:
        raise ValueError("closure of Q leaves the essential frequency support")
    idx = list(range(ws.size)) if indices is None else sorted(int(i) for i in indices)
    members = []
    bad = []
    for i in idx:
        m = np.linalg.inv(ws.group.element(ws.params[i])).T
        if essential.set_distance(Image(m, Q)) <= 0:
            bad.append(i)
        members.append((i, m))
    if bad:
        raise ValueError(f"members escape the essential frequency support: indices {bad}")
    sets = {i: Image(m, Q) for i, m in members}
    neighbors = {i: [i] for i in idx}
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            i, j = idx[a], idx[b]
            if sets_intersect(sets[i], sets[j], strict=True):
                neighbors[i].append(j)
                neighbors[j].append(i)
    neighbors = {i: sorted(v) for i, v in neighbors.items()}
    return Cover(ws, Q, members, neighbors, _edge_members(ws, idx, neighbors))


def _edge_members(ws, idx, neighbors) -> frozenset:
    """Members whose neighbour pattern may be cut by the finite truncation."""
    present = {tuple(np.round(ws.params[i] / ws.step).astype(int)) for i in idx}
    offsets = set()
    for i, nb in neighbors.items():
        for j in nb:
            offsets.add(tuple(np.round((ws.params[j] - ws.params[i]) / ws.step).astype(int)))
    edge = set()
    for i in idx:
        base = np.round(ws.params[i] / ws.step).astype(int)
        for off in offsets:
            if tuple(base + np.array(off)) not in present:
                edge.add(i)
                break
    return frozenset(edge)


def restrict_cover(c: Cover, keep) -> Cover:
    """Sub-family of a cover (e.g. with deliberate gaps); neighbours recomputed."""
    return induced_cover(c.wellspread, c.Q, indices=keep)


def admissibility_report(c: Cover, probe, essential: EssentialSupport | None = None) -> dict:
    """Numerical check of the admissible-covering axioms on probe points of the essential support."""
    essential = essential or c.wellspread.group.essential_support()
    pts = np.asarray(probe, dtype=float).reshape(-1, c.Q.dim)
    covered = np.zeros(len(pts), dtype=bool)
    margin = np.inf
    for i, m in c.members:
        s = Image(m, c.Q)
        covered |= s.contains(pts)
        margin = min(margin, essential.set_distance(s))
    return {
        "N_Q": c.N_Q,
        "covered_fraction": float(covered.mean()) if len(pts) else 0.0,
        "min_member_margin_to_complement": float(margin),
        "members": len(c.members),
        "edge_members": len(c.edge),
    }


@dataclass
class ModerateWeight:
    weight: Weight
    q: float
    values: dict
    moderation_constant: float

    def to_dict(self) -> dict:
        return {"weight": self.weight.to_dict(), "q": self.q,
                "values": {str(k): v for k, v in self.values.items()},
                "moderation_constant": self.moderation_constant}


def _inv(e: float) -> float:
    return 0.0 if np.isinf(e) else 1.0 / e


def transplant_weight(c: Cover, v: Weight, q: float, base=None) -> ModerateWeight:
    """``u_i = |det(h_i b)|^{1/2 - 1/q} v(h_i b)`` with ``b`` a fixed element of ``U`` (default identity)."""
    b = np.eye(c.Q.dim) if base is None else np.atleast_2d(np.asarray(base, dtype=float))
    expo = 0.5 - _inv(q)
    values = {}
    for i, _ in c.members:
        h = c.h(i) @ b
        vi = v(h)
        if not vi > 0:
            raise ValueError(f"weight is not positive at member {i}")
        values[i] = abs(np.linalg.det(h)) ** expo * vi
    interior = [i for i in values if i not in c.edge] or list(values)
    ratios = [values[i] / values[l] for i in interior for l in c.neighbors[i] if l in values]
    const = float(max(ratios))
    if const > MODERATION_LIMIT:
        raise ValueError(f"weight is not moderate on this cover (constant {const:.3g})")
    return ModerateWeight(v, q, values, const)

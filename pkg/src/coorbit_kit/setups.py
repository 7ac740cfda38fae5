"""Standard desk-scale scenarios and seeded band-limited signal suites."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bapu import Bapu, base_set, build_bapu, partition_cells
from .cover import Cover, induced_cover, transplant_weight, well_spread
from .fourier import FreqGrid
from .group import DilationGroup, haar_samples
from .sets import Annulus, FrequencySet
from .transform import Signal
from .weights import Weight
from .window import Window, build_bump_window, normalize_calderon, smooth_step

LN2 = float(np.log(2.0))
BAND = (0.5, 4.0)


def bump_1d(t) -> np.ndarray:
    """Smooth bump on ``(-1, 1)`` equal to 1 near 0."""
    t = np.abs(np.asarray(t, dtype=float))
    return smooth_step(2.0 * (1.0 - t))


def random_signal(grid: FreqGrid, rng, band=BAND, n_bumps: int = 3, shift: float | None = None,
                  name: str = "signal") -> Signal:
    """Sum of smooth frequency bumps with random centres, widths, phases and translations.

    Every bump sits inside ``band_lo <= |xi| <= band_hi`` (radially in ``d > 1``).
    """
    lo, hi = band
    d = grid.dim
    shift = min(grid.period) / 8 if shift is None else shift
    parts = []
    for _ in range(n_bumps):
        width = rng.uniform(0.25, 0.5)
        r = rng.uniform(lo + width, hi - width)
        if d == 1:
            centre = np.array([r * rng.choice([-1.0, 1.0])])
        else:
            u = rng.standard_normal(d)
            centre = r * u / np.linalg.norm(u)
            width = min(width, r - lo, hi - r)
        amp = rng.uniform(0.5, 1.5) * np.exp(2j * np.pi * rng.uniform())
        x0 = rng.uniform(-shift, shift, d)
        parts.append((centre, width, amp, x0))

    def profile(p, parts=parts):
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape[:-1], dtype=complex)
        for centre, width, amp, x0 in parts:
            rr = np.linalg.norm(p - centre, axis=-1) / width
            out += amp * bump_1d(rr) * np.exp(-2j * np.pi * (p @ x0))
        return out

    return Signal.from_profile(grid, profile, Annulus(lo, hi, d), name)


def signal_suite(grid: FreqGrid, n: int = 20, seed: int = 0, band=BAND) -> list[Signal]:
    rng = np.random.default_rng(seed)
    return [random_signal(grid, rng, band, n_bumps=int(rng.integers(1, 4)), name=f"s{k}") for k in range(n)]


def band_probe(dim: int = 1, band=BAND, n: int = 401) -> np.ndarray:
    r = np.linspace(band[0], band[1], n)
    if dim == 1:
        return np.concatenate([r, -r])[:, None]
    ang = np.linspace(0, 2 * np.pi, 24, endpoint=False)
    u = np.stack([np.cos(ang), np.sin(ang)], -1)
    if dim == 2:
        return (r[:, None, None] * u[None]).reshape(-1, 2)
    raise ValueError("band probes are provided for d <= 2")


@dataclass
class Scenario:
    grid: FreqGrid
    group: DilationGroup
    window: Window
    samples: list
    chart_extent: tuple

    def with_samples(self, n: int) -> list:
        return haar_samples(self.group, self.chart_extent, n)


def similitude_1d(n: int = 1024, spacing: float = 1 / 32, C: FrequencySet | None = None, margin: float = 0.25,
                  extent: float = 2.5 * LN2 - 1e-9, n_samples: int = 1024, probe=None) -> Scenario:
    """``H = (0, inf)`` acting on ``R``; bump window on ``C`` (default ``1 <= |xi| <= 2``), Calderon-normalized."""
    grid = FreqGrid((n,), (spacing,))
    g = DilationGroup.similitude(1)
    C = C or Annulus(1.0, 2.0)
    w = build_bump_window(grid, C, margin)
    samples = haar_samples(g, (-extent, extent), n_samples)
    probe = band_probe(1) if probe is None else probe
    w = normalize_calderon(w, g, samples, probe)
    return Scenario(grid, g, w, samples, (-extent, extent))


def dyadic_bapu(sc: Scenario, cells=(-2, 2), samples=None) -> tuple[Cover, Bapu]:
    """Dyadic cells ``[i ln 2 - ln 2 / 2, i ln 2 + ln 2 / 2)`` for the similitude scenario."""
    ws = well_spread(sc.group, (cells[0] * LN2, cells[1] * LN2), LN2)
    Q = base_set(sc.window, ws)
    cover = induced_cover(ws, Q)
    cp = partition_cells(ws, samples or sc.samples)
    return cover, build_bapu(sc.window, cp, cover)


def cocompact_pair(n: int = 1024, spacing: float = 1 / 32, n_samples: int = 1024):
    """Covers of the same base set from ``<2>`` (cyclic) and ``exp(R log 2)`` (one-parameter).

    Returns ``[(cover, bapu), (cover, bapu)]`` sharing ``Q = {1/2 <= |xi| <= 5/2}``
    and the lattice ``h_i = 2^i``.
    """
    grid = FreqGrid((n,), (spacing,))
    Q = Annulus(0.5, 2.5)
    probe = band_probe(1)
    out = []
    # cyclic: Calderon sum over j is normalised pointwise
    gc = DilationGroup.cyclic([[2.0]])
    wc = build_bump_window(grid, Annulus(0.8, 2.2), 0.2)
    sc_samples = haar_samples(gc, (-3, 3))
    wc = normalize_calderon(wc, gc, sc_samples, probe)
    ws = well_spread(gc, (-2, 2), 1)
    cover = induced_cover(ws, Q)
    cells = partition_cells(ws, [s for s in sc_samples if abs(s.param[0]) <= 2])
    out.append((cover, build_bapu(wc, cells, cover, grid)))
    # one-parameter exp(t log 2): cells [i - 1/2, i + 1/2) in t
    go = DilationGroup.one_parameter([[LN2]])
    wo = build_bump_window(grid, Annulus(0.85, 1.65), 0.1)
    so = haar_samples(go, (-2.5 + 1e-9, 2.5 - 1e-9), n_samples)
    wo = normalize_calderon(wo, go, so, probe)
    ws = well_spread(go, (-2, 2), 1.0)
    cover = induced_cover(ws, Q)
    out.append((cover, build_bapu(wo, partition_cells(ws, so), cover, grid)))
    return out


def unit_weights(cover: Cover, q: float):
    return transplant_weight(cover, Weight(), q)

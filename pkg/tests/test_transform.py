import numpy as np
import pytest
from scipy.integrate import quad

from coorbit_kit.group import haar_samples
from coorbit_kit.norms import NormSpec, mixed_norm
from coorbit_kit.sets import Annulus
from coorbit_kit.setups import LN2, random_signal, similitude_1d
from coorbit_kit.transform import (GTransform, Signal, amalgam_norm, cwt, decay_envelope, local_maximum,
                                   reproducing_residual)
from coorbit_kit.window import build_bump_window, normalize_calderon
from coorbit_kit.setups import band_probe


def direct_coefficient(f, w, x, h):
    """<f, pi(x, h) psi> as an adaptive frequency integral of the exact profiles."""
    def integrand(xi, part):
        p = np.array([[xi]])
        v = f.evaluate(p)[0] * np.conj(w.evaluate(p * h)[0]) * np.sqrt(h) * np.exp(2j * np.pi * x * xi)
        return v.real if part == 0 else v.imag
    lo, hi = 0.5, 4.0
    re = sum(quad(integrand, s * hi if s < 0 else s * lo, s * lo if s < 0 else s * hi, args=(0,), limit=400)[0]
             for s in (-1, 1))
    im = sum(quad(integrand, s * hi if s < 0 else s * lo, s * lo if s < 0 else s * hi, args=(1,), limit=400)[0]
             for s in (-1, 1))
    return re + 1j * im


def test_cwt_matches_direct_sums(sim, suite):
    # plain quadrature sum over the frequency samples, no FFT
    f = suite[3]
    samples = [sim.samples[k] for k in (300, 1024, 1700)]
    F = cwt(f, sim.window, samples)
    xi = sim.grid.points()[..., 0]
    x = sim.grid.space_points()[..., 0]
    for k, s in enumerate(samples):
        h = s.h[0, 0]
        for m in (0, 37, 1000):
            ref = np.sum(f.fhat * np.conj(sim.window.evaluate((xi * h)[:, None])) * np.sqrt(h)
                         * np.exp(2j * np.pi * x[m] * xi)) * sim.grid.spacing[0]
            assert F.coeffs[k, m] == pytest.approx(ref, abs=1e-13)


def test_cwt_converges_to_inner_product_integrals(sim, suite):
    # the grid model is periodic in x; its distance to the continuum integral is aliasing,
    # which shrinks as the periodic cell grows
    errs = []
    for n, spacing in ((1024, 1 / 32), (4096, 1 / 128)):
        sc = similitude_1d(n=n, spacing=spacing, n_samples=64)
        f = suite[3].on_grid(sc.grid)
        samples = [sc.samples[k] for k in (10, 32, 50)]
        F = cwt(f, sc.window, samples)
        x = sc.grid.space_points()[..., 0]
        peak = np.abs(F.coeffs).max()
        err = 0.0
        for k, s in enumerate(samples):
            for xv in (0.0, 1.15625, -0.75):
                m = int(np.argmin(np.abs(x - xv)))
                err = max(err, abs(F.coeffs[k, m] - direct_coefficient(f, sc.window, x[m], s.h[0, 0])) / peak)
        errs.append(err)
    assert errs[0] < 1e-3
    assert errs[1] < errs[0] / 4


def test_translation_covariance(sim, suite):
    f = suite[0]
    shift = 5 * sim.grid.dx[0]
    F = cwt(f, sim.window, sim.samples[::64])
    G = cwt(f.translated([shift]), sim.window, sim.samples[::64])
    assert np.allclose(G.coeffs, np.roll(F.coeffs, 5, axis=1), atol=1e-12)


def test_dilation_covariance(sim, suite):
    # W(pi(0, g) f)(x, h) = W f(g^{-1} x, g^{-1} h); g = 2 shifts the log chart by ln 2
    # a long periodic cell keeps the aliasing between the two periodisations small
    sc = similitude_1d(n=4096, spacing=1 / 128, n_samples=256)
    f = suite[1].on_grid(sc.grid)
    shift = 64
    samples = haar_samples(sc.group, (-2 * LN2, 2 * LN2), 4 * shift + 1)
    idx = np.arange(shift, 4 * shift + 1)
    F = cwt(f, sc.window, [samples[k] for k in idx - shift])
    G = cwt(f.dilated([[2.0]]), sc.window, [samples[k] for k in idx])
    # g^{-1} x on the lattice: even spatial points of G match F at x / 2
    x = sc.grid.space_points()[..., 0]
    m = np.flatnonzero((np.abs(x) < 4) & (np.round(x / sc.grid.dx[0]) % 2 == 0))
    half = np.array([int(np.argmin(np.abs(x - v / 2))) for v in x[m]])
    assert np.allclose(G.coeffs[:, m], F.coeffs[:, half], atol=1e-6)


def test_isometry(sim, suite):
    for f in suite[:3]:
        F = cwt(f, sim.window, sim.samples)
        assert mixed_norm(F, NormSpec(2, 2)) == pytest.approx(f.l2_norm(), rel=1e-6)


def test_flags_slices_leaving_the_grid(sim, suite):
    # declared band reaching past the grid: small scales put the window beyond it
    wide = Signal(sim.grid, suite[0].fhat, Annulus(0.5, 40.0))
    far = haar_samples(sim.group, (-3.5, -3.0), 3)
    with pytest.warns(UserWarning, match="flagged"):
        F = cwt(wide, sim.window, far)
    assert F.flagged.all()
    assert not cwt(suite[0], sim.window, far).flagged.any()


def test_reproducing_residual_small(sim_small):
    g = sim_small.group
    ref = haar_samples(g, (-2.5, 2.5), 2048)
    w1 = normalize_calderon(build_bump_window(sim_small.grid, Annulus(1, 2), 0.25), g, ref, band_probe(1))
    w2 = normalize_calderon(build_bump_window(sim_small.grid, Annulus(0.9, 1.6), 0.3), g, ref, band_probe(1))
    f = random_signal(sim_small.grid, np.random.default_rng(5))
    r = reproducing_residual(f, w1, w2, haar_samples(g, (-2.5, 2.5), 256))
    assert r["residual"] < 1e-3


def test_decay_envelope_and_transporter(sim, suite):
    f = suite[2]
    F = cwt(f, sim.window, sim.samples[::8])
    rep = decay_envelope(F, f.band_support, sim.window.support, 4)
    assert rep["violations"] == 0 and rep["outside_hits"] == 0.0
    assert np.isfinite(rep["fitted_C"]) and rep["fitted_C"] > 0


def test_local_maximum_dominates(sim, suite):
    F = cwt(suite[0], sim.window, sim.samples[::32])
    M = local_maximum(F, 0.1, 0.05)
    assert np.all(M >= np.abs(F.coeffs) - 1e-15)
    assert amalgam_norm(F, 0.1, 0.05, NormSpec(2, 2)) >= mixed_norm(F, NormSpec(2, 2))
    with pytest.raises(ValueError):
        local_maximum(F, 1e-4, 0.05)


def test_signal_io_and_dilation(tmp_path, sim, suite):
    f = suite[0]
    f.save(tmp_path / "f.bin")
    g = Signal.load(tmp_path / "f.bin")
    assert np.array_equal(g.fhat, f.fhat)
    d = f.dilated([[0.5]])
    assert d.l2_norm() == pytest.approx(f.l2_norm(), rel=1e-5)


def test_decay_envelope_zero_order(sim, suite):
    f = suite[0]
    F = cwt(f, sim.window, sim.samples[::8], warn=False)
    hn = np.array([np.linalg.norm(s.h, 2) for s in F.samples])
    expected = np.max(np.abs(F.coeffs).reshape(len(hn), -1).max(axis=1) / np.sqrt(1 + hn))
    assert decay_envelope(F, f.band_support, sim.window.support, 0)["fitted_C"] == pytest.approx(expected, rel=1e-12)

"""Command-line front end: ``coorbit-kit <command> --config <file.json> [--out dir] [--seed n] [--threads n]``.

Exit codes: 0 all checks passed, 1 a check failed or a stage raised, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys
import tempfile
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bapu import base_set, build_bapu, partition_cells, verify_bapu
from .cover import induced_cover, transplant_weight, well_spread
from .fourier import FreqGrid, write_json_atomic
from .frames import frame_bounds, frame_reconstruct, analysis, sampling_set, write_log_csv, write_sequence_csv
from .group import (DilationGroup, default_base_set, haar_samples, is_expansive,
                    is_integrably_admissible_one_parameter, is_integrably_admissible_two_param,
                    orbit_covers, transporter_probe)
from .norms import NormSpec, besov_norm, coorbit_norm, decomposition_norm, mixed_norm
from .quasinorm import build_quasinorm, equivalence_test
from .sets import Annulus, FrequencySet
from .setups import BAND, LN2, band_probe, signal_suite
from .transform import Signal, cwt, reproducing_residual
from .weights import Weight
from .window import build_bump_window, normalize_calderon

STAGES = ("bapu", "cwt", "coorbit-norm", "decomp-norm", "besov-norm", "reproduce-test", "frame-sweep",
          "quasinorm-equiv", "decomp-vs-coorbit")
COMMANDS = ("check-group", "pipeline") + STAGES

DEFAULT_TOL = {
    "bapu": {"partition_defect": 1e-3, "support_leakage": 1e-10},
    "cwt": {"isometry": 1e-2},
    "coorbit-norm": {"isometry": 1e-2},
    "decomp-norm": {"lost_mass": 1e-8},
    "besov-norm": {"covariance": 1e-2},
    "reproduce-test": {"residual": 1e-2},
    "frame-sweep": {"frame_ratio": 2.0, "reconstruction": 1e-2},
    "quasinorm-equiv": {"homogeneity": 1e-10},
    "decomp-vs-coorbit": {"bracket": 10.0},
}


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (exit code 2)."""


# ---------------------------------------------------------------- config parsing

def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _grid(cfg: dict) -> FreqGrid:
    g = cfg.get("grid", {"N": [1024], "spacing": [1 / 32]})
    return FreqGrid.from_dict(g)


def _group(cfg: dict) -> DilationGroup:
    return DilationGroup.from_config(cfg.get("group", {"kind": "similitude", "dim": 1}))


def _default_extent(g: DilationGroup):
    if g.kind == "cyclic":
        return (-3, 3)
    if g.kind == "diag2param":
        return ((-2.5 * LN2, 2.5 * LN2), (-2.5 * LN2, 2.5 * LN2))
    return (-2.5 * LN2 + 1e-9, 2.5 * LN2 - 1e-9)


def _samples(cfg: dict, g: DilationGroup, key: str = "samples", n_default: int = 2048):
    s = cfg.get(key, {})
    extent = s.get("extent", _default_extent(g))
    return haar_samples(g, extent, s.get("n", n_default))


def _band(cfg: dict) -> tuple:
    b = cfg.get("signals", {}).get("band", BAND)
    if len(b) != 2 or not 0 < b[0] < b[1]:
        raise ConfigError("signal band must be [lo, hi] with 0 < lo < hi")
    return float(b[0]), float(b[1])


def _probe(cfg: dict, dim: int):
    try:
        return band_probe(dim, _band(cfg))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _window(cfg: dict, grid: FreqGrid, g: DilationGroup, samples, key: str = "window"):
    wc = cfg.get(key, {})
    C = FrequencySet.from_dict(wc["C"]) if "C" in wc else default_base_set(g)
    w = build_bump_window(grid, C, float(wc.get("margin", 0.25)))
    if wc.get("normalize", True):
        w = normalize_calderon(w, g, samples, _probe(cfg, grid.dim))
    return w


def _signals(cfg: dict, grid: FreqGrid, seed: int) -> list:
    sc = cfg.get("signals", {})
    if "files" in sc:
        base = Path(cfg.get("_dir", "."))
        out = []
        for f in sc["files"]:
            p = base / f
            if not p.exists():
                raise ConfigError(f"signal file not found: {p}")
            out.append(Signal.load(p).on_grid(grid))
        return out
    return signal_suite(grid, int(sc.get("n", 20)), seed, _band(cfg))


def _norm_spec(cfg: dict) -> NormSpec:
    n = cfg.get("norm", {})
    return NormSpec(_pq(n.get("p", 2)), _pq(n.get("q", 2)), Weight.from_dict(n.get("v")))


def _pq(v) -> float:
    if isinstance(v, str):
        if v.lower() in ("inf", "infinity"):
            return np.inf
        raise ConfigError(f"exponent must be a number or 'inf', got {v!r}")
    return float(v)


def _pq_str(v: float) -> str:
    return "inf" if np.isinf(v) else f"{v:g}"


def _tolerances(cfg: dict, stage: str) -> dict:
    tol = dict(DEFAULT_TOL.get(stage, {}))
    tol.update(cfg.get("tolerances", {}))
    return tol


def _pmap(fn, items, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _write_csv_atomic(path: Path, header, rows, meta: dict | None = None) -> None:
    buf = io.StringIO()
    if meta:
        for k, v in meta.items():
            buf.write(f"# {k}: {json.dumps(v)}\n")
    wr = csv.writer(buf)
    wr.writerow(header)
    wr.writerows(rows)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(buf.getvalue())
    os.replace(tmp, path)


def _cover(cfg: dict, g: DilationGroup, w, samples, grid):
    cc = cfg.get("cover", {})
    if g.kind == "cyclic":
        rng_default, step_default = (-2, 2), 1
    else:
        rng_default, step_default = (-2 * LN2, 2 * LN2), LN2
    ws = well_spread(g, cc.get("chart_range", rng_default), cc.get("step", step_default))
    Q = FrequencySet.from_dict(cc["Q"]) if "Q" in cc else base_set(w, ws)
    cover = induced_cover(ws, Q)
    lo, hi = ws.chart_range()
    half = 0.5 * np.atleast_1d(ws.cell)
    inside = [s for s in samples if np.all(np.asarray(s.param) >= lo - half - 1e-12)
              and np.all(np.asarray(s.param) < hi + half - 1e-12)]
    cp = partition_cells(ws, inside)
    return cover, build_bapu(w, cp, cover, grid)


# ---------------------------------------------------------------- stages

def _scenario(cfg):
    grid = _grid(cfg)
    g = _group(cfg)
    samples = _samples(cfg, g)
    w = _window(cfg, grid, g, samples)
    return grid, g, samples, w


def stage_bapu(cfg, out: Path, seed: int, threads: int) -> dict:
    grid, g, samples, w = _scenario(cfg)
    tol = _tolerances(cfg, "bapu")
    cover, b = _cover(cfg, g, w, samples, grid)
    rep = verify_bapu(b, _probe(cfg, grid.dim), tol["partition_defect"], tol["support_leakage"])
    b.save(out / "bapu")
    write_json_atomic(out / "cover.json", cover.to_dict())
    checks = {
        "partition_defect": rep["max_partition_defect"] < tol["partition_defect"],
        "support_leakage": rep["support_leakage"] < tol["support_leakage"],
        "C_Phi_finite": bool(np.isfinite(rep["C_Phi"])),
    }
    return {"results": {k: v for k, v in rep.items() if k != "pass"} | {"N_Q": cover.N_Q}, "checks": checks,
            "tolerances": tol, "files": ["bapu/", "cover.json"]}


def stage_cwt(cfg, out: Path, seed: int, threads: int) -> dict:
    grid, g, samples, w = _scenario(cfg)
    tol = _tolerances(cfg, "cwt")
    suite = _signals(cfg, grid, seed)

    def one(f):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            F = cwt(f, w, samples)
        F.save(out / f"cwt_{f.name}.bin")
        ratio = coorbit_norm(f, w, samples, NormSpec()) / f.l2_norm()
        return [f.name, int(np.sum(F.flagged)), ratio]

    rows = _pmap(one, suite, threads)
    _write_csv_atomic(out / "cwt_summary.csv", ["signal", "flagged_slices", "l2_ratio"], rows,
                      {"tolerance_isometry": tol["isometry"], "n_samples": len(samples)})
    err = max(abs(r[2] - 1) for r in rows)
    return {"results": {"max_isometry_error": err}, "checks": {"isometry": err < tol["isometry"]},
            "tolerances": tol, "files": ["cwt_summary.csv"] + [f"cwt_{r[0]}.bin" for r in rows]}


def stage_coorbit_norm(cfg, out: Path, seed: int, threads: int) -> dict:
    grid, g, samples, w = _scenario(cfg)
    tol = _tolerances(cfg, "coorbit-norm")
    spec = _norm_spec(cfg)
    suite = _signals(cfg, grid, seed)
    vals = _pmap(lambda f: coorbit_norm(f, w, samples, spec), suite, threads)
    rows = [[f.name, v, f.l2_norm()] for f, v in zip(suite, vals)]
    _write_csv_atomic(out / "coorbit_norms.csv", ["signal", "coorbit_norm", "l2_norm"], rows,
                      {"norm": spec.to_dict(), "n_samples": len(samples)})
    checks = {"finite": bool(np.all(np.isfinite(vals)))}
    res = {"values": vals}
    if spec.p == 2 and spec.q == 2 and spec.v.is_trivial:
        err = max(abs(v / r[2] - 1) for v, r in zip(vals, rows))
        res["max_isometry_error"] = err
        checks["isometry"] = err < tol["isometry"]
    return {"results": res, "checks": checks, "tolerances": tol, "files": ["coorbit_norms.csv"]}


def stage_decomp_norm(cfg, out: Path, seed: int, threads: int) -> dict:
    grid, g, samples, w = _scenario(cfg)
    tol = _tolerances(cfg, "decomp-norm")
    spec = _norm_spec(cfg)
    cover, b = _cover(cfg, g, w, samples, grid)
    u = transplant_weight(cover, spec.v, spec.q)
    suite = _signals(cfg, grid, seed)
    res = _pmap(lambda f: decomposition_norm(f, b, u, spec.p, spec.q), suite, threads)
    rows = [[f.name, r["value"], r["lost_mass"]] for f, r in zip(suite, res)]
    _write_csv_atomic(out / "decomposition_norms.csv", ["signal", "decomposition_norm", "lost_mass"], rows,
                      {"norm": spec.to_dict(), "moderation_constant": u.moderation_constant, "N_Q": cover.N_Q})
    lost = max(r["lost_mass"] for r in res)
    return {"results": {"values": [r["value"] for r in res], "max_lost_mass": lost,
                        "moderation_constant": u.moderation_constant},
            "checks": {"lost_mass": lost < tol["lost_mass"]}, "tolerances": tol,
            "files": ["decomposition_norms.csv"]}


def stage_besov_norm(cfg, out: Path, seed: int, threads: int) -> dict:
    grid = _grid(cfg)
    tol = _tolerances(cfg, "besov-norm")
    bc = cfg.get("besov", {})
    A = np.atleast_2d(np.asarray(bc.get("A", 2.0 * np.eye(grid.dim)), dtype=float))
    alpha = float(bc.get("alpha", 0.0))
    p, q = _pq(bc.get("p", 2)), _pq(bc.get("q", 2))
    phc = bc.get("phi", {})
    C = FrequencySet.from_dict(phc["C"]) if "C" in phc else Annulus(0.55, 0.85, grid.dim)
    phi = build_bump_window(grid, C, float(phc.get("margin", 0.1)))
    suite = _signals(cfg, grid, seed)
    detA = abs(np.linalg.det(A))
    inv_p = 0.0 if np.isinf(p) else 1.0 / p

    def one(f):
        a = besov_norm(f, A, alpha, p, q, phi)
        row = [f.name, a["value"], a["lost_mass"]]
        if bc.get("covariance", True):
            # f(A x) on the Fourier side: |det A|^{-1} fhat(A^{-T} xi)
            fa = f.dilated(np.linalg.inv(A)).scaled(detA ** -0.5)
            b = besov_norm(fa, A, alpha, p, q, phi)
            pred = detA ** (alpha - inv_p) * a["value"]
            row += [b["value"], pred, abs(b["value"] / pred - 1)]
        return row

    rows = _pmap(one, suite, threads)
    header = ["signal", "besov_norm", "lost_mass"]
    checks = {"finite": bool(all(np.isfinite(r[1]) for r in rows))}
    res = {"values": [r[1] for r in rows]}
    if bc.get("covariance", True):
        header += ["dilated_norm", "predicted", "relative_error"]
        err = max(r[5] for r in rows)
        res["max_covariance_error"] = err
        checks["covariance"] = err < tol["covariance"]
    _write_csv_atomic(out / "besov_norms.csv", header, rows,
                      {"A": A.tolist(), "alpha": alpha, "p": _pq_str(p), "q": _pq_str(q)})
    return {"results": res, "checks": checks, "tolerances": tol, "files": ["besov_norms.csv"]}


def stage_reproduce(cfg, out: Path, seed: int, threads: int) -> dict:
    cfg = dict(cfg)
    cfg.setdefault("grid", {"N": [512], "spacing": [1 / 32]})
    grid, g, ref, w1 = _scenario(cfg)
    tol = _tolerances(cfg, "reproduce-test")
    cfg.setdefault("window2", {"C": {"kind": "annulus", "r_inner": 0.9, "r_outer": 1.6}, "margin": 0.3})
    w2 = _window(cfg, grid, g, ref, "window2")
    counts = [int(n) for n in cfg.get("scale_samples", [256, 512])]
    extent = cfg.get("samples", {}).get("extent", _default_extent(g))
    sc = dict(cfg.get("signals", {}))
    sc.setdefault("n", 5)
    suite = _signals(cfg | {"signals": sc}, grid, seed)
    rows, by_count = [], {}
    for n in counts:
        S = haar_samples(g, extent, n)
        res = _pmap(lambda f: reproducing_residual(f, w1, w2, S), suite, threads)
        by_count[n] = [r["residual"] for r in res]
        rows += [[n, f.name, r["residual"], r["coverage_flag"]] for f, r in zip(suite, res)]
    _write_csv_atomic(out / "reproduce.csv", ["scale_samples", "signal", "residual", "coverage_flag"], rows,
                      {"tolerance_residual": tol["residual"], "extent": extent})
    first = max(by_count[counts[0]])
    results = {"max_residual": {str(n): max(v) for n, v in by_count.items()}}
    checks = {"residual": first < tol["residual"]}
    if len(counts) > 1:
        ratios = [float(np.mean(by_count[b]) / np.mean(by_count[a])) for a, b in zip(counts, counts[1:])]
        results["refinement_ratios"] = ratios
        if "halving" in tol:
            checks["halving"] = all(abs(r - 0.5) <= tol["halving"] * 0.5 for r in ratios)
    return {"results": results, "checks": checks, "tolerances": tol, "files": ["reproduce.csv"]}


def stage_frame_sweep(cfg, out: Path, seed: int, threads: int) -> dict:
    grid, g, samples, w = _scenario(cfg)
    tol = _tolerances(cfg, "frame-sweep")
    spec = _norm_spec(cfg)
    if g.kind != "similitude" or grid.dim != 1:
        raise ConfigError("frame-sweep supports the 1D similitude group")
    j0, j1 = cfg.get("scales", [-3, 2])
    hs = [np.array([[2.0 ** j]]) for j in range(j0, j1 + 1)]
    params = [(j * LN2,) for j in range(j0, j1 + 1)]
    spacings = [float(a) for a in cfg.get("spacings", [0.125, 0.25, 0.5, 1, 2, 4])]
    a_rec = float(cfg.get("reconstruct_spacing", 0.25))
    suite = _signals(cfg, grid, seed)

    def one(a):
        fb = frame_bounds(suite, w, sampling_set(hs, params, a, grid), spec, samples)
        return [a, fb["A_hat"], fb["B_hat"]]

    rows = _pmap(one, spacings, threads)
    _write_csv_atomic(out / "frame_sweep.csv", ["a", "A_hat", "B_hat"], rows,
                      {"norm": spec.to_dict(), "scales": [j0, j1], "n_signals": len(suite)})
    A_hats = [r[1] for r in sorted(rows)]
    X = sampling_set(hs, params, a_rec, grid)
    fb = frame_bounds(suite, w, X, spec, samples)
    f = suite[0]
    sd = analysis(f, w, X, spec)
    rec, log = frame_reconstruct(sd, w, X, int(cfg.get("iterations", 50)), B_hat=fb["B_hat"])
    err = float(np.linalg.norm(rec.fhat - f.fhat) / np.linalg.norm(f.fhat))
    write_sequence_csv(out / "coefficients.csv", sd)
    write_log_csv(out / "reconstruction_log.csv", log)
    ratio = fb["B_hat"] / fb["A_hat"]
    checks = {
        "frame_ratio": ratio <= tol["frame_ratio"],
        "reconstruction": err < tol["reconstruction"],
        "monotone_A_decay": bool(np.all(np.diff(A_hats) < 0)),
    }
    return {"results": {"frame_ratio": ratio, "reconstruction_error": err, "iterations": len(log) - 1,
                        "sweep": rows},
            "checks": checks, "tolerances": tol,
            "files": ["frame_sweep.csv", "coefficients.csv", "reconstruction_log.csv"]}


def stage_quasinorm(cfg, out: Path, seed: int, threads: int) -> dict:
    tol = _tolerances(cfg, "quasinorm-equiv")
    if "A1" not in cfg or "A2" not in cfg:
        raise ConfigError("quasinorm-equiv needs matrices 'A1' and 'A2'")
    q1, q2 = build_quasinorm(cfg["A1"]), build_quasinorm(cfg["A2"])
    rng = np.random.default_rng(seed)
    hom = 0.0
    for q in (q1, q2):
        x = rng.standard_normal((2000, q.dim)) * 10 ** rng.uniform(-3, 3, (2000, 1))
        hom = max(hom, float(np.max(np.abs(q.evaluate(x @ q.A.T) / (q.detA * q.evaluate(x)) - 1))))
    rc = cfg.get("radii", {})
    radii = np.logspace(float(rc.get("lo_decade", -4)), float(rc.get("hi_decade", 4)), int(rc.get("n", 801)))
    rep = equivalence_test(q1, q2, radii, rng=rng)
    write_json_atomic(out / "equivalence.json", rep | {"seed": seed})
    checks = {"homogeneity": hom < tol["homogeneity"]}
    if "expect" in cfg:
        checks["verdict"] = rep["equivalent"] == (cfg["expect"] == "equivalent")
    return {"results": {"homogeneity_error": hom} | {k: rep[k] for k in
                        ("ratio_lo", "ratio_hi", "slope_per_decade", "verdict")},
            "checks": checks, "tolerances": tol, "files": ["equivalence.json"]}


def stage_decomp_vs_coorbit(cfg, out: Path, seed: int, threads: int) -> dict:
    grid, g, samples, w = _scenario(cfg)
    tol = _tolerances(cfg, "decomp-vs-coorbit")
    v = Weight.from_dict(cfg.get("norm", {}).get("v"))
    cover, b = _cover(cfg, g, w, samples, grid)
    suite = _signals(cfg, grid, seed)
    exps = [_pq(e) for e in cfg.get("exponents", [1, 2, "inf"])]
    pairs = [(p, q) for p in exps for q in exps]
    weights = {q: transplant_weight(cover, v, q) for q in exps}

    def one(f):
        F = cwt(f, w, samples, warn=False)
        out_rows = []
        for p, q in pairs:
            co = mixed_norm(F, NormSpec(p, q, v))
            de = decomposition_norm(f, b, weights[q], p, q)["value"]
            out_rows.append([f.name, _pq_str(p), _pq_str(q), de, co, de / co])
        return out_rows

    rows = [r for rs in _pmap(one, suite, threads) for r in rs]
    ratios = np.array([r[5] for r in rows])
    C = float(max(ratios.max(), 1 / ratios.min()))
    _write_csv_atomic(out / "decomp_vs_coorbit.csv", ["signal", "p", "q", "decomposition", "coorbit", "ratio"],
                      rows, {"N_Q": cover.N_Q, "tolerance_bracket": tol["bracket"]})
    write_json_atomic(out / "bracket.json", {"ratio_lo": float(ratios.min()), "ratio_hi": float(ratios.max()),
                                             "C": C})
    return {"results": {"ratio_lo": float(ratios.min()), "ratio_hi": float(ratios.max()), "C": C},
            "checks": {"bracket": C <= tol["bracket"]}, "tolerances": tol,
            "files": ["decomp_vs_coorbit.csv", "bracket.json"]}


STAGE_FN = {
    "bapu": stage_bapu,
    "cwt": stage_cwt,
    "coorbit-norm": stage_coorbit_norm,
    "decomp-norm": stage_decomp_norm,
    "besov-norm": stage_besov_norm,
    "reproduce-test": stage_reproduce,
    "frame-sweep": stage_frame_sweep,
    "quasinorm-equiv": stage_quasinorm,
    "decomp-vs-coorbit": stage_decomp_vs_coorbit,
}


# ---------------------------------------------------------------- check-group

def check_group(cfg: dict) -> dict:
    gc = cfg.get("group", cfg)
    g = DilationGroup.from_config(gc)
    if g.kind == "one_parameter":
        verdict, predicate = is_integrably_admissible_one_parameter(g.matrix), "one_parameter"
    elif g.kind == "cyclic":
        verdict, predicate = is_expansive(g.matrix), "expansive"
    elif g.kind == "diag2param":
        verdict, predicate = is_integrably_admissible_two_param(g.alpha, g.beta), "two_param"
    elif g.kind == "similitude":
        verdict, predicate = True, "similitude"
    else:
        verdict, predicate = False, "finite"
    evidence: dict = {}
    if g.dim <= 2 and g.kind != "explicit":
        samples = haar_samples(g, cfg.get("extent", _default_extent(g) if g.kind != "one_parameter"
                                          else (-4.0, 4.0)), cfg.get("n", 41))
        C = default_base_set(g)
        try:
            evidence["transporter"] = transporter_probe(g, C, C, samples).to_dict()
            evidence["orbit_cover"] = orbit_covers(g, C, band_probe(g.dim, (0.75, 3.0), 41), samples).to_dict()
        except (ValueError, RuntimeError) as exc:
            evidence["probe_error"] = str(exc)
    return {"predicate": predicate, "verdict": bool(verdict), "group": g.to_config(), "evidence": evidence}


# ---------------------------------------------------------------- entry point

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coorbit-kit", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default="coorbit_out", help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="seed for signal suites and probes")
    ap.add_argument("--threads", type=int, default=1, help="worker threads across independent units")
    return ap


def _manifest(command, stage, cfg, seed, threads, body, elapsed) -> dict:
    return {
        "command": command,
        "stage": stage,
        "versions": {"coorbit_kit": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "seed": seed,
        "threads": threads,
        "config": {k: v for k, v in cfg.items() if not k.startswith("_")},
        "elapsed_s": elapsed,
        **body,
    }


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = _load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    cfg["_dir"] = str(Path(args.config).resolve().parent)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    if args.command == "check-group":
        try:
            rep = check_group(cfg)
        except (ConfigError, ValueError, KeyError, TypeError) as exc:
            print(f"error: invalid group config: {exc}", file=sys.stderr)
            return 2
        body = {"results": rep, "checks": {"admissible": rep["verdict"]}, "tolerances": {}, "files": []}
        man = _manifest("check-group", None, cfg, seed, args.threads, body, time.perf_counter() - t0)
        man["pass"] = rep["verdict"]
        write_json_atomic(out / "manifest.json", man)
        print(json.dumps({"verdict": rep["verdict"], "predicate": rep["predicate"]}))
        return 0 if rep["verdict"] else 1

    stage = cfg.get("stage") if args.command == "pipeline" else args.command
    if stage not in STAGE_FN:
        print(f"error: pipeline config must name a stage in {list(STAGES)}", file=sys.stderr)
        return 2
    try:
        body = STAGE_FN[stage](cfg, out, seed, args.threads)
    except (ConfigError, KeyError, TypeError) as exc:
        print(f"error: configuration: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        man = _manifest(args.command, stage, cfg, seed, args.threads,
                        {"error": f"{type(exc).__name__}: {exc}", "pass": False}, time.perf_counter() - t0)
        write_json_atomic(out / "manifest.json", man)
        print(f"error: stage {stage} failed: {exc}", file=sys.stderr)
        return 1
    body["checks"] = {k: bool(v) for k, v in body["checks"].items()}
    body["pass"] = all(body["checks"].values())
    man = _manifest(args.command, stage, cfg, seed, args.threads, body, time.perf_counter() - t0)
    write_json_atomic(out / "manifest.json", man)
    print(json.dumps({"stage": stage, "pass": body["pass"], "checks": body["checks"]}, default=str))
    return 0 if body["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())

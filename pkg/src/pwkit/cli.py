"""Command-line experiment runner.

    pwkit run --config exp.json [--seed N] [--out DIR] [--emit-plots] [--tol X]
    pwkit describe N KIND [J]

Exit status: 0 when the experiment passes, 2 when a mathematical check
fails, 1 for usage and I/O errors. Outputs are deterministic: identical
configs (and seeds) give byte-identical files.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from pwkit import __version__
from pwkit.affine import cauchy_constant, project_spectrum
from pwkit.analysis import (
    affinity_verdict,
    exp_type_bound_check,
    growth_bound,
    kernel_invariance_check,
    nonaffine_spread,
    oob_of,
    random_line_probes,
    scale_family,
    sine_family,
    warp_phase_profile,
    warped,
)
from pwkit.errors import PWError
from pwkit.io import dumps, format_csv, spectrum_csv
from pwkit.maps import AffineMap, warp_from_dict, warp_dims
from pwkit.pwcore import PWSignal, eval_pw, eval_pw_complex_on_line, make_catalog
from pwkit.spectra import SampleGrid, bandwidth_estimate, dft_spectrum, oob_energy, sample_on_grid

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
KINDS = ("catalog", "warp", "spectrum", "verify-affine", "verify-theorem", "growth-bound", "projection")
RANDOMIZED = ("verify-affine", "verify-theorem", "growth-bound", "projection")
CONFIG_VERSION = 1
DEFAULT_GRIDS = {1: (64 * math.pi, 4096), 2: (16 * math.pi, 256)}


class ConfigError(PWError, ValueError):
    pass


@dataclass
class ExperimentConfig:
    """One experiment. ``out`` is excluded from the config hash so that the
    same experiment written to two directories yields identical bytes."""

    kind: str
    n: int = 1
    m: Optional[int] = None
    signal: dict = field(default_factory=lambda: {"kind": "K"})
    grid: Optional[dict] = None
    warp: Optional[dict] = None
    family: Optional[dict] = None
    eps: Optional[list] = None
    window: str = "hann"
    tol: Optional[float] = None
    tolerances: dict = field(default_factory=dict)
    expect: Optional[str] = None
    probes: int = 20
    seed: Optional[int] = None
    emit_plots: bool = False
    out: Optional[str] = None
    version: int = CONFIG_VERSION

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {self.version}")
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError("n must be a positive integer")
        if self.m is not None and (not isinstance(self.m, int) or self.m < 1):
            raise ConfigError("m must be a positive integer")
        if self.seed is not None and not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        if "kind" not in d:
            raise ConfigError("config needs a 'kind'")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("out")
        return hashlib.sha256(dumps(d).encode()).hexdigest()

    @property
    def in_dim(self) -> int:
        return self.m if self.m is not None else self.n


@dataclass
class Outcome:
    status: int
    summary: dict
    tables: list = field(default_factory=list)  # (name, header, rows)
    plots: list = field(default_factory=list)  # (name, callable(path, description))


# ---------------------------------------------------------------------------
# helpers


def _signal(cfg: ExperimentConfig, dim: int) -> PWSignal:
    s = cfg.signal or {"kind": "K"}
    try:
        return make_catalog(dim, s.get("kind", "K"), s.get("j"), s.get("shift"))
    except KeyError as exc:
        raise ConfigError(f"bad signal spec: {exc}") from None


def _grid(cfg: ExperimentConfig, dim: int) -> SampleGrid:
    g = cfg.grid or {}
    hw, nodes = DEFAULT_GRIDS.get(dim, (8 * math.pi, 64))
    return SampleGrid(float(g.get("half_width", hw)), int(g.get("nodes", nodes)), dim)


def _warp(cfg: ExperimentConfig):
    if cfg.warp is None:
        raise ConfigError(f"experiment {cfg.kind!r} needs a 'warp'")
    try:
        return warp_from_dict(cfg.warp)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad warp spec: {exc}") from None


def _injection(n: int, m: int):
    S = np.eye(n, m)
    return lambda t: np.atleast_2d(t) @ S.T


def _describe_dict(f: PWSignal) -> dict:
    return {
        "label": f.catalog.label,
        "dim": f.dim,
        "closed_form": f.closed_form(),
        "support_box": [list(p) for p in f.support.box],
        "ball_radius": f.band_radius,
        "spectrum_l2": f.spectrum_l2_norm(),
        "signal_l2": (2 * math.pi) ** (f.dim / 2) * f.spectrum_l2_norm(),
    }


def describe_catalog(n: int, kind: str, j: Optional[int] = None) -> str:
    f = make_catalog(n, kind, j)
    d = _describe_dict(f)
    box = " x ".join(f"[{lo:g},{hi:g}]" for lo, hi in f.support.box)
    return (
        f"{d['label']} on R^{n}: {d['closed_form']}, support {box}\n"
        f"ball radius {d['ball_radius']:.12g}\n"
        f"L2 norm of spectrum {d['spectrum_l2']:.12g}, of signal {d['signal_l2']:.12g}\n"
    )


# ---------------------------------------------------------------------------
# experiments


def _exp_catalog(cfg: ExperimentConfig) -> Outcome:
    f = _signal(cfg, cfg.n)
    grid = _grid(cfg, 1)
    x = grid.axis()
    t = np.zeros((len(x), cfg.n))
    t[:, 0] = x
    vals = eval_pw(f, t)
    rows = [(xi, v.real, v.imag) for xi, v in zip(x, vals)]
    return Outcome(
        EXIT_OK,
        {"signal": _describe_dict(f)},
        [("cut", ["t_1", "re", "im"], rows)],
        [("cut", lambda p, d: _plots().plot_cut(x, vals, p, d))],
    )


def _exp_spectrum(cfg: ExperimentConfig) -> Outcome:
    f = _signal(cfg, cfg.n)
    grid = _grid(cfg, cfg.n)
    spec = dft_spectrum(sample_on_grid(f, grid), grid, cfg.window)
    r0 = f.band_radius
    tol = cfg.tolerances.get("bandwidth", 1e-4)
    summary = {
        "signal": _describe_dict(f),
        "grid": grid.to_dict(),
        "nyquist": grid.nyquist,
        "resolution": grid.resolution,
        "window": cfg.window,
        "total_energy": spec.total_energy,
        "band_radius": r0,
        "oob_at_band_radius": oob_energy(spec, r0),
        "bandwidth_tol": tol,
        "bandwidth_estimate": bandwidth_estimate(spec, tol),
    }
    return Outcome(
        EXIT_OK, summary, [("spectrum", None, spec)],
        [("spectrum", lambda p, d: _plots().plot_spectrum(spec, p, r0, d))],
    )


def _exp_warp(cfg: ExperimentConfig) -> Outcome:
    n, m = cfg.n, cfg.in_dim
    f = _signal(cfg, n)
    grid = _grid(cfg, m)
    r0 = f.band_radius
    floor = oob_of(warped(f, AffineMap(np.eye(n, m), None)), grid, r0, cfg.window)
    summary = {"signal": _describe_dict(f), "grid": grid.to_dict(), "window": cfg.window,
               "leakage_floor": floor}
    tables, plots = [], []
    if cfg.family is not None:
        fam = cfg.family.get("type")
        if fam == "sine":
            family = sine_family(int(cfg.family.get("axis", 1)), float(cfg.family.get("frequency", 1.0)))
        elif fam == "scale":
            family = scale_family(m)
        else:
            raise ConfigError(f"unknown warp family {fam!r}")
        if m != n:
            raise ConfigError("warp families act on R^n; set m = n")
        eps = cfg.eps if cfg.eps is not None else [0.0, 0.1, 0.3, 0.5]
        table = nonaffine_spread(family, eps, f, grid, r0, cfg.window, cfg.seed)
        summary["spread"] = table.to_dict()
        keys = ["eps", "affine", "radius", "oob", "ratio"]
        tables.append(("spread", keys, [[r[k] for k in keys] for r in table.rows]))
        plots.append(("spread", lambda p, d: _plots().plot_spread(table, p, d)))
    if cfg.warp is not None:
        warp = _warp(cfg)
        if warp_dims(warp, m) != n:
            raise ConfigError(f"warp must map R^{m} to R^{n}")
        aff = warp.as_affine(m)
        radius = aff.op_norm * r0 if aff is not None else r0
        spec = dft_spectrum(sample_on_grid(warped(f, warp), grid), grid, cfg.window)
        oob = oob_energy(spec, radius)
        summary.update({
            "affine": aff is not None,
            "injective": None if aff is None else aff.is_injective,
            "radius": radius,
            "oob": oob,
            "ratio_to_floor": oob / floor if floor > 0 else math.inf,
        })
        tables.append(("spectrum", None, spec))
        plots.append(("spectrum", lambda p, d: _plots().plot_spectrum(spec, p, radius, d)))
    if cfg.warp is None and cfg.family is None:
        raise ConfigError("warp experiment needs a 'warp' or a 'family'")
    return Outcome(EXIT_OK, summary, tables, plots)


def _verdict_outcome(cfg, warp, m, summary, tables, plots):
    probes = random_line_probes(m, cfg.probes, cfg.seed)
    tol = cfg.tol if cfg.tol is not None else 1e-6
    verdict = affinity_verdict(warp, probes, tol=tol,
                               nonaffine_tol=cfg.tolerances.get("nonaffine", 1e-2))
    summary["verdict"] = verdict.to_dict()
    summary["probes"] = [p.to_dict() for p in probes]
    tables.append(("residuals", ["probe", "axis", "residual"], [list(r) for r in verdict.residuals]))
    w = verdict.witness
    prof = warp_phase_profile(warp, probes[w["probe"]], w["axis"])
    title = f"probe {w['probe']}, axis {w['axis']}, residual {w['residual']:.3g}"
    plots.append(("phase", lambda p, d: _plots().plot_phase_profile(prof, p, d, title)))
    return verdict


def _exp_verify_affine(cfg: ExperimentConfig) -> Outcome:
    warp = _warp(cfg)
    m = cfg.in_dim
    summary, tables, plots = {}, [], []
    verdict = _verdict_outcome(cfg, warp, m, summary, tables, plots)
    status = EXIT_OK
    if cfg.expect is not None and verdict.verdict != cfg.expect:
        status = EXIT_FAIL
    summary["expect"] = cfg.expect
    return Outcome(status, summary, tables, plots)


BRANCH_TEXT = {
    "dimension": "m > n: no continuous map from R^m to R^n keeps every bandlimited f bandlimited",
    "injective-affine": "injective affine map: f o phi stays bandlimited with band radius at most ||A|| r",
    "kernel": "affine map with nontrivial kernel: f o phi is constant along ker A, so it cannot decay",
    "non-affine": "non-affine map: the phase of Q_j/K along some line is not affine, so some f leaves the class",
}


def _exp_verify_theorem(cfg: ExperimentConfig) -> Outcome:
    n, m = cfg.n, cfg.in_dim
    expect = cfg.expect or "preserved"
    summary = {"n": n, "m": m, "expect": expect}
    tables, plots = [], []
    if m > n:
        summary.update({"branch": "dimension", "explanation": BRANCH_TEXT["dimension"],
                        "outcome": "violated" if cfg.warp is not None else "not-applicable"})
        status = EXIT_FAIL if cfg.warp is not None else EXIT_OK
        return Outcome(status, summary)

    warp = _warp(cfg)
    if warp_dims(warp, m) != n:
        raise ConfigError(f"warp must map R^{m} to R^{n}")
    f = _signal(cfg, n)
    grid = _grid(cfg, m)
    r0 = f.band_radius
    factor = cfg.tolerances.get("leakage_factor", 10.0)
    floor = oob_of(warped(f, AffineMap(np.eye(n, m), None)), grid, r0, cfg.window)
    summary.update({"signal": _describe_dict(f), "grid": grid.to_dict(), "window": cfg.window,
                    "leakage_floor": floor, "leakage_factor": factor})
    aff = warp.as_affine(m)

    if aff is not None and not aff.is_injective:
        shifts = np.linspace(-100.0, 100.0, 21)
        rep = kernel_invariance_check(f, aff.A, aff.b, shifts)
        summary.update({"branch": "kernel", "kernel_check": rep.to_dict()})
        outcome = "violated" if rep.invariant and rep.decay_violation else "inconclusive"
    else:
        radius = aff.op_norm * r0 if aff is not None else r0
        spec = dft_spectrum(sample_on_grid(warped(f, warp), grid), grid, cfg.window)
        oob = oob_energy(spec, radius)
        ratio = oob / floor if floor > 0 else math.inf
        summary.update({"radius": radius, "oob": oob, "ratio_to_floor": ratio})
        plots.append(("spectrum", lambda p, d: _plots().plot_spectrum(spec, p, radius, d)))
        if aff is not None:
            summary["branch"] = "injective-affine"
            outcome = "preserved" if ratio <= factor else "violated"
        else:
            summary["branch"] = "non-affine"
            verdict = _verdict_outcome(cfg, warp, m, summary, tables, plots)
            spread = ratio > factor
            summary["spread_detected"] = spread
            outcome = "violated" if (verdict.verdict == "non-affine" or spread) else "inconclusive"
    summary["explanation"] = BRANCH_TEXT[summary["branch"]]
    summary["outcome"] = outcome
    return Outcome(EXIT_OK if outcome == expect else EXIT_FAIL, summary, tables, plots)


def _exp_growth_bound(cfg: ExperimentConfig) -> Outcome:
    n = cfg.n
    kind = (cfg.signal or {}).get("kind", "all")
    if kind == "all":
        signals = [make_catalog(n, "K"), make_catalog(n, "F")]
        signals += [make_catalog(n, k, j) for k in ("P", "Q") for j in range(1, n + 1)]
    else:
        signals = [_signal(cfg, n)]
    rng = np.random.default_rng(cfg.seed)
    lines = [(rng.uniform(-3, 3, n), rng.standard_normal(n)) for _ in range(cfg.probes)]
    angles = 2 * math.pi * np.arange(64) / 64
    zs = np.concatenate([[0.0], *(rad * np.exp(1j * angles) for rad in (2.5, 5.0, 7.5, 10.0))])
    tol = cfg.tol if cfg.tol is not None else 1e-8
    rows, scatter = [], []
    worst = math.inf
    for f in signals:
        for i, (a, b) in enumerate(lines):
            margins = exp_type_bound_check(f, a, b, zs)
            k = int(np.argmin(margins))
            worst = min(worst, float(margins[k]))
            rows.append([f.catalog.label, i, abs(zs[k]), float(np.angle(zs[k])), float(margins[k])])
            if i == 0:
                F = np.abs(eval_pw_complex_on_line(f, a, b, zs))
                scatter += list(zip(np.abs(zs), growth_bound(f, b, zs), F))
    summary = {"signals": [f.catalog.label for f in signals], "lines": len(lines),
               "z_count": len(zs), "min_margin": worst, "tol": tol}
    status = EXIT_OK if worst >= -tol else EXIT_FAIL
    return Outcome(
        status, summary,
        [("margins", ["signal", "line", "abs_z", "arg_z", "min_margin"], rows)],
        [("margins", lambda p, d: _plots().plot_margins(scatter, p, d))],
    )


def _exp_projection(cfg: ExperimentConfig) -> Outcome:
    n = cfg.n
    m = cfg.m if cfg.m is not None else n - 1
    f = _signal(cfg, n)
    per_unit = cfg.tolerances.get("per_unit")
    spec = f.spectral_rep(int(per_unit)) if per_unit else f.spectral_rep()
    g = project_spectrum(spec, m)
    marginal = PWSignal.from_density(g)
    rng = np.random.default_rng(cfg.seed)
    x = rng.uniform(-10, 10, (cfg.probes, m))
    approx = marginal.spectral.evaluate(x)
    est = marginal.spectral.quadrature_error(x)
    ref = eval_pw(f, _injection(n, m)(x))
    err = np.abs(approx - ref)
    tol = cfg.tol if cfg.tol is not None else 1e-3
    bound = cauchy_constant(spec.support.ball_radius, n, m) * spec.l2_norm()
    summary = {
        "signal": _describe_dict(f), "n": n, "m": m, "grid_counts": list(spec.counts),
        "max_abs_error": float(err.max()), "max_error_estimate": float(np.nanmax(est)),
        "tol": tol, "marginal_l2": g.l2_norm(), "cauchy_bound": bound,
    }
    ok = bool(err.max() <= tol and g.l2_norm() <= bound * (1 + 1e-12))
    rows = [list(xi) + [a.real, a.imag, r.real, r.imag, e, q] for xi, a, r, e, q in zip(x, approx, ref, err, est)]
    header = [f"x_{s + 1}" for s in range(m)] + ["re", "im", "ref_re", "ref_im", "abs_err", "err_estimate"]
    plots = []
    if m == 1:
        u = g.axes[0]
        plots.append(("marginal", lambda p, d: _plots().plot_cut(u, g.values, p, d, label="|g|")))
    return Outcome(EXIT_OK if ok else EXIT_FAIL, summary, [("projection", header, rows)], plots)


EXPERIMENTS = {
    "catalog": _exp_catalog,
    "spectrum": _exp_spectrum,
    "warp": _exp_warp,
    "verify-affine": _exp_verify_affine,
    "verify-theorem": _exp_verify_theorem,
    "growth-bound": _exp_growth_bound,
    "projection": _exp_projection,
}


def _plots():
    from pwkit import plotting

    return plotting


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> tuple:
    """Run ``cfg`` and write its artifacts; returns ``(status, [paths])``."""
    if cfg.kind in RANDOMIZED and cfg.seed is None:
        raise ConfigError(f"experiment {cfg.kind!r} needs a seed")
    out = Path(out_dir if out_dir is not None else (cfg.out or "."))
    out.mkdir(parents=True, exist_ok=True)
    outcome = EXPERIMENTS[cfg.kind](cfg)
    digest = cfg.config_hash()
    stamp = [f"config_sha256={digest}", f"pwkit_version={__version__}", f"experiment={cfg.kind}"]
    written = []
    result = {
        "experiment": cfg.kind,
        "status": outcome.status,
        "passed": outcome.status == EXIT_OK,
        "config": {k: v for k, v in cfg.to_dict().items() if k != "out"},
        "config_sha256": digest,
        "pwkit_version": __version__,
        "result": _jsonable(outcome.summary),
    }
    path = out / "result.json"
    path.write_text(dumps(result))
    written.append(path)
    for name, header, rows in outcome.tables:
        path = out / f"{name}.csv"
        text = spectrum_csv(rows, stamp) if header is None else format_csv(header, rows, stamp)
        path.write_text(text)
        written.append(path)
    if cfg.emit_plots:
        for name, draw in outcome.plots:
            path = out / f"{name}.svg"
            draw(path, "; ".join(stamp))
            written.append(path)
    return outcome.status, written


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pwkit", description="Paley-Wiener warp experiments")
    p.add_argument("--version", action="version", version=f"pwkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("--config", required=True, help="path to the experiment config (JSON)")
    run.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    run.add_argument("--out", help="output directory (default: config 'out' or .)")
    run.add_argument("--emit-plots", action="store_true", help="also write SVG figures")
    run.add_argument("--tol", type=float, help="override the experiment's main tolerance")

    desc = sub.add_parser("describe", help="print a catalog signal summary")
    desc.add_argument("n", type=int)
    desc.add_argument("kind", choices=["K", "P", "Q", "F"])
    desc.add_argument("j", type=int, nargs="?")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "describe":
            sys.stdout.write(describe_catalog(args.n, args.kind, args.j))
            return EXIT_OK
        cfg = ExperimentConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.tol is not None:
            cfg.tol = args.tol
        if args.emit_plots:
            cfg.emit_plots = True
        cfg.__post_init__()
        status, written = run_experiment(cfg, args.out)
    except (PWError, OSError) as exc:
        print(f"pwkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for path in written:
        print(path)
    print("PASS" if status == EXIT_OK else "VERIFICATION FAILED", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Every command prints a JSON report to stdout (and to ``--output`` if given).
Settings come from built-in defaults, then a ``--config`` YAML/JSON file, then
flags given explicitly on the command line.

Exit status: 0 when the run completed, 3 when the input was degenerate (the
self-normalizer vanished), 1 on input errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import null as nullmod
from .changepoint import WbsConfig, contrast_curve, run_cp_test, wbs_detect, wbs_threshold
from .dgp import CpSpec, DgpSpec, MultiCpSpec
from .errors import CacheError, InvalidObjectError, NullMismatchError
from .experiments import (
    ChangePointDesign,
    TwoSampleDesign,
    location_experiment,
    rows_to_csv,
    size_power_experiment,
    wbs_experiment,
)
from .io import SeriesFormatError, parse_series
from .two_sample import pairwise_pvalue_matrix, profiles, run_k_sample_test

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DEGENERATE = 3

DEFAULTS = {
    "eta": 0.15,
    "eta1": 0.15,
    "eta2": 0.05,
    "alpha": 0.05,
    "variant": None,
    "null_cache": None,
    "null_grid": nullmod.DEFAULT_GRID,
    "null_reps": nullmod.DEFAULT_REPS,
    "null_seed": nullmod.DEFAULT_SEED,
    "kind": None,
    "M": None,
    "p": None,
    "format": None,
    "wbs_M": 100,
    "wbs_J": 200,
    "min_len": 20,
    "level": 0.95,
    "seed": 0,
    "family": "Deta",
    "output": None,
    "csv": None,
}


class CliError(Exception):
    pass


def _load_config(path) -> dict:
    text = Path(path).read_text()
    data = yaml.safe_load(text) if text.strip() else {}
    if not isinstance(data, dict):
        raise CliError(f"config {path} must be a mapping")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _settings(args: argparse.Namespace) -> dict:
    s = dict(DEFAULTS)
    if getattr(args, "config", None):
        s.update(_load_config(args.config))
    s.update({k: v for k, v in vars(args).items() if k not in ("command", "config", "func")})
    return s


def _null_for(s: dict, family: str, params) -> nullmod.NullSampleSet:
    return nullmod.load_or_simulate(family, params, int(s["null_grid"]), int(s["null_reps"]),
                                    int(s["null_seed"]), s["null_cache"])


def _read(path, s):
    return parse_series(path, kind=s["kind"], M=s["M"], p=s["p"], fmt=s["format"])


def _clean(x):
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _emit(report: dict, s: dict):
    text = json.dumps(_clean(report), indent=2, sort_keys=True)
    print(text)
    if s.get("output"):
        Path(s["output"]).write_text(text + "\n")


def _settings_block(s: dict, keys) -> dict:
    return {k: s[k] for k in keys}


# --- commands ---------------------------------------------------------------


def cmd_k_sample(s: dict, files, default_variant: str) -> int:
    variant = s["variant"] or default_variant
    samples = [_read(f, s) for f in files]
    eta = float(s["eta"])
    null = _null_for(s, "Deta", (eta,))
    rep = run_k_sample_test(samples, eta, float(s["alpha"]), variant, null)
    out = rep.to_dict()
    out["inputs"] = [str(f) for f in files]
    out["settings"] = _settings_block(s, ("eta", "alpha", "null_grid", "null_reps", "null_seed"))
    if s.get("csv") and len(samples) == 2:
        p = profiles(samples[0], samples[1], eta)
        rows = [{"k": int(k), "r": float(k) / p.n, "T": float(t), "TC": float(tc)}
                for k, t, tc in zip(p.k, p.T, p.TC)]
        rows_to_csv(rows, s["csv"])
    _emit(out, s)
    return EXIT_DEGENERATE if rep.degenerate else EXIT_OK


def cmd_two_sample(args) -> int:
    s = _settings(args)
    return cmd_k_sample(s, [args.sample1, args.sample2], "D2")


def cmd_n_sample(args) -> int:
    s = _settings(args)
    if len(args.samples) < 2:
        raise CliError("n-sample needs at least two input files")
    return cmd_k_sample(s, args.samples, "DN2")


def cmd_cp_test(args) -> int:
    s = _settings(args)
    series = _read(args.series, s)
    eta1, eta2 = float(s["eta1"]), float(s["eta2"])
    variant = s["variant"] or "SN2"
    curve = contrast_curve(series, eta1, eta2, variant)
    null = _null_for(s, "Seta", (eta1, eta2))
    rep = run_cp_test(series, eta1, eta2, float(s["alpha"]), variant, null, curve=curve)
    out = rep.to_dict()
    out["input"] = str(args.series)
    out["settings"] = _settings_block(s, ("eta1", "eta2", "alpha", "null_grid", "null_reps", "null_seed"))
    if s.get("csv"):
        rows = [{"k": int(k), "value": float(v), "degenerate": bool(d)}
                for k, v, d in zip(curve.k, curve.values, curve.degenerate)]
        rows_to_csv(rows, s["csv"])
    _emit(out, s)
    return EXIT_DEGENERATE if rep.degenerate else EXIT_OK


def _wbs_cfg(s: dict) -> WbsConfig:
    return WbsConfig(M=int(s["wbs_M"]), J=int(s["wbs_J"]), min_len=int(s["min_len"]),
                     eta1=float(s["eta1"]), eta2=float(s["eta2"]), level=float(s["level"]),
                     seed=int(s["seed"]))


def cmd_wbs(args) -> int:
    s = _settings(args)
    series = _read(args.series, s)
    cfg = _wbs_cfg(s)
    n = len(series)
    out = {"input": str(args.series), "n": n, "settings": cfg.to_dict()}
    if n < cfg.min_len:
        out.update(change_points=[], threshold=None, note="series shorter than min_len")
    else:
        xi, intervals = wbs_threshold(n, cfg)
        seg = wbs_detect(series, cfg, xi, intervals)
        out.update(change_points=list(seg.points), threshold=xi)
    _emit(out, s)
    return EXIT_OK


def cmd_simulate_null(args) -> int:
    s = _settings(args)
    family = s["family"]
    params = (float(s["eta"]),) if family == "Deta" else (float(s["eta1"]), float(s["eta2"]))
    null = nullmod.load_or_simulate(family, params, int(s["null_grid"]), int(s["null_reps"]),
                                    int(s["null_seed"]), s["null_cache"])
    cache_dir = Path(s["null_cache"]) if s["null_cache"] else nullmod.default_cache_dir()
    fname = nullmod.cache_filename(family, params, null.grid_size, null.replications, null.seed)
    out = {
        "null": null.metadata(),
        "cache_file": str(cache_dir / fname),
        "critical_values": nullmod.critical_value_table(null).as_dict(),
    }
    _emit(out, s)
    return EXIT_OK


def _expand(cfg: dict) -> list[dict]:
    """Designs from an explicit ``designs`` list and/or the product of a ``grid`` mapping."""
    base = {k: v for k, v in cfg.get("design", {}).items()}
    designs = [dict(base, **d) for d in cfg.get("designs", [])]
    grid = cfg.get("grid")
    if grid:
        keys = list(grid)
        for combo in itertools.product(*(grid[k] if isinstance(grid[k], list) else [grid[k]] for k in keys)):
            designs.append(dict(base, **dict(zip(keys, combo))))
    if not designs:
        designs = [base]
    return designs


def run_experiment_config(cfg: dict, null_cache=None) -> list[dict]:
    kind = cfg.get("type", "two_sample")
    reps = int(cfg.get("replications", 500))
    seed = int(cfg.get("seed", 0))
    alpha = float(cfg.get("alpha", 0.05))
    ncfg = cfg.get("null", {})
    grid = int(ncfg.get("grid_size", nullmod.DEFAULT_GRID))
    nreps = int(ncfg.get("replications", nullmod.DEFAULT_REPS))
    nseed = int(ncfg.get("seed", nullmod.DEFAULT_SEED))
    rows: list[dict] = []
    for d in _expand(cfg):
        d = dict(d)
        if kind == "two_sample":
            eta = float(d.pop("eta", 0.15))
            variants = tuple(d.pop("variants", ("D1", "D2")))
            design = TwoSampleDesign(DgpSpec(**d), eta, variants)
            null = nullmod.load_or_simulate("Deta", (eta,), grid, nreps, nseed, null_cache)
            rows.extend(r.row() for r in size_power_experiment(design, reps, alpha, seed, null).values())
        elif kind == "changepoint":
            eta1 = float(d.pop("eta1", 0.15))
            eta2 = float(d.pop("eta2", 0.05))
            variants = tuple(d.pop("variants", ("SN1", "SN2")))
            design = ChangePointDesign(CpSpec(**d), eta1, eta2, variants)
            null = nullmod.load_or_simulate("Seta", (eta1, eta2), grid, nreps, nseed, null_cache)
            rows.extend(r.row() for r in size_power_experiment(design, reps, alpha, seed, null).values())
        elif kind == "location":
            eta1 = float(d.pop("eta1", 0.15))
            eta2 = float(d.pop("eta2", 0.05))
            variant = d.pop("variant", "SN2")
            spec = CpSpec(**d)
            tau = location_experiment(spec, reps, seed, eta1, eta2, variant)
            err = np.abs(tau - spec.tau)
            rows.append({"test": "location", "dgp": spec.dgp.value, "n": spec.n, "tau": spec.tau,
                         "rho": spec.rho, "delta1": spec.delta1, "delta2": spec.delta2,
                         "variant": variant, "replications": reps,
                         "median_abs_error": float(np.nanmedian(err)),
                         "mean_abs_error": float(np.nanmean(err))})
        elif kind == "wbs":
            wb = {k: d.pop(k) for k in ("M", "J", "min_len", "eta1", "eta2", "level") if k in d}
            cfg_w = WbsConfig(seed=int(d.pop("wbs_seed", 0)), **wb)
            spec = MultiCpSpec(**d)
            rows.append(wbs_experiment(spec, reps, seed, cfg_w).row())
        else:
            raise CliError(f"unknown experiment type {kind!r}")
    return rows


def cmd_experiment(args) -> int:
    cfg = _load_config(args.design)
    s = _settings(args)
    rows = run_experiment_config(cfg, s["null_cache"])
    text = rows_to_csv(rows, s.get("csv"))
    if s.get("output"):
        Path(s["output"]).write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_pairwise(args) -> int:
    s = _settings(args)
    samples = [_read(f, s) for f in args.samples]
    eta = float(s["eta"])
    null = _null_for(s, "Deta", (eta,))
    res = pairwise_pvalue_matrix(samples, eta, s["variant"] or "D2", null)
    out = res.to_dict()
    out["inputs"] = [str(f) for f in args.samples]
    out["settings"] = _settings_block(s, ("eta", "null_grid", "null_reps", "null_seed"))
    out["null"] = null.metadata()
    _emit(out, s)
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def _common(p: argparse.ArgumentParser, *, series=True, null=True):
    S = argparse.SUPPRESS
    p.add_argument("--config", help="YAML or JSON file with settings (flags given here win)")
    p.add_argument("--output", "-o", default=S, help="also write the report to this file")
    if series:
        p.add_argument("--kind", default=S, help="space kind if the file header omits it")
        p.add_argument("--M", type=int, default=S, help="grid size for distributions/functions")
        p.add_argument("--p", type=int, default=S, help="matrix dimension")
        p.add_argument("--format", default=S, choices=["values", "samples"])
    if null:
        p.add_argument("--null-cache", dest="null_cache", default=S,
                       help="null-sample cache directory (default: $SNMETRIC_CACHE_DIR)")
        p.add_argument("--null-grid", dest="null_grid", type=int, default=S)
        p.add_argument("--null-reps", dest="null_reps", type=int, default=S)
        p.add_argument("--null-seed", dest="null_seed", type=int, default=S)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    ap = argparse.ArgumentParser(prog="snmetric", description="Self-normalized inference for object-valued time series")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("two-sample", help="two-sample test (D1/D2)")
    p.add_argument("sample1")
    p.add_argument("sample2")
    p.add_argument("--eta", type=float, default=S)
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--variant", choices=["D1", "D2"], default=S)
    p.add_argument("--csv", default=S, help="write T/TC profiles here")
    _common(p)
    p.set_defaults(func=cmd_two_sample)

    p = sub.add_parser("n-sample", help="N-sample test (DN1/DN2)")
    p.add_argument("samples", nargs="+")
    p.add_argument("--eta", type=float, default=S)
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--variant", choices=["DN1", "DN2"], default=S)
    _common(p)
    p.set_defaults(func=cmd_n_sample)

    p = sub.add_parser("cp-test", help="single change-point test (SN1/SN2)")
    p.add_argument("series")
    p.add_argument("--eta1", type=float, default=S)
    p.add_argument("--eta2", type=float, default=S)
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--variant", choices=["SN1", "SN2"], default=S)
    p.add_argument("--csv", default=S, help="write the statistic curve here")
    _common(p)
    p.set_defaults(func=cmd_cp_test)

    p = sub.add_parser("wbs", help="multiple change points by wild binary segmentation")
    p.add_argument("series")
    p.add_argument("--M", dest="wbs_M", type=int, default=S, help="number of random intervals")
    p.add_argument("--J", dest="wbs_J", type=int, default=S, help="Gaussian calibration replicates")
    p.add_argument("--min-len", dest="min_len", type=int, default=S)
    p.add_argument("--eta1", type=float, default=S)
    p.add_argument("--eta2", type=float, default=S)
    p.add_argument("--level", type=float, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--config", help="YAML or JSON file with settings")
    p.add_argument("--output", "-o", default=S)
    p.add_argument("--kind", default=S)
    p.add_argument("--grid-size", dest="M", type=int, default=S, help="grid size for distributions/functions")
    p.add_argument("--p", type=int, default=S)
    p.add_argument("--format", default=S, choices=["values", "samples"])
    p.set_defaults(func=cmd_wbs)

    p = sub.add_parser("simulate-null", help="simulate and cache a null law")
    p.add_argument("--family", choices=["Deta", "Seta"], default=S)
    p.add_argument("--eta", type=float, default=S)
    p.add_argument("--eta1", type=float, default=S)
    p.add_argument("--eta2", type=float, default=S)
    _common(p, series=False)
    p.set_defaults(func=cmd_simulate_null)

    p = sub.add_parser("experiment", help="run a Monte Carlo design file, emit CSV")
    p.add_argument("design", help="YAML/JSON experiment design")
    p.add_argument("--csv", default=S)
    _common(p, series=False)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("pairwise-matrix", help="pairwise two-sample p-values")
    p.add_argument("samples", nargs="+")
    p.add_argument("--eta", type=float, default=S)
    p.add_argument("--variant", choices=["D1", "D2"], default=S)
    _common(p)
    p.set_defaults(func=cmd_pairwise)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SeriesFormatError, InvalidObjectError, NullMismatchError, CacheError, CliError,
            FileNotFoundError, ValueError, TypeError) as exc:
        print(f"snmetric {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

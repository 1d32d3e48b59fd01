"""Command-line entry point: simulate, analyze, evaluate, benchmark.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import cross_map_score, lm_pvalues, mask_from_pvalues
from .causality import log_transform, lsngc_affinity
from .core import (
    RunConfig,
    _read_json,
    _write_json,
    matrix_from_json,
    matrix_to_json,
    read_adjacency,
    read_affinity,
    read_ensemble,
    write_adjacency,
    write_affinity,
    write_ensemble,
    write_matrix_csv,
)
from .embedding import select_lag
from .errors import LsngcError
from .evaluate import METHODS, RecoveryScore, roc_auc, run_benchmark, sens_spec
from .simulate import MODELS, SimulationSpec, generate

log = logging.getLogger("lsngc")

DEFAULT_LENGTHS = (500, 400, 300, 200, 100, 50)

# flag name -> (RunConfig field, parser)
CONFIG_KEYS = {
    "d": lambda v: v if v == "auto" else int(v),
    "c_f": int,
    "c_g": int,
    "alpha": float,
    "seed": int,
    "epsilon_log": float,
    "d_max": int,
}


class UsageError(Exception):
    pass


def _version_text() -> str:
    cfg = RunConfig()
    return (
        f"lsngc {__version__}\n"
        f"defaults: d={cfg.d} (Cao's method, d_max={cfg.d_max}), c_f={cfg.c_f}, "
        f"c_g={cfg.c_g}, alpha={cfg.alpha}, epsilon_log={cfg.epsilon_log}"
    )


class _VersionAction(argparse.Action):
    # the stock version action rewraps text and loses the line break
    def __init__(self, option_strings, dest, **kwargs):
        super().__init__(option_strings, dest, nargs=0, help="print version and parameter defaults")

    def __call__(self, parser, namespace, values, option_string=None):
        print(_version_text())
        parser.exit()


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", help="embedding dimension or 'auto'")
    p.add_argument("--c-f", dest="c_f", type=int, help="codebook size for the multivariate space")
    p.add_argument("--c-g", dest="c_g", type=int, help="codebook size for the source space")
    p.add_argument("--alpha", type=float, help="FDR level")
    p.add_argument("--seed", type=int)
    p.add_argument("--epsilon-log", dest="epsilon_log", type=float)
    p.add_argument("--d-max", dest="d_max", type=int, help="largest dimension tried by Cao's method")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lsngc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action=_VersionAction)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON object of option values; flags win")
    common.add_argument("--workers", type=int, help="parallel workers (results do not depend on it)")

    p = sub.add_parser("simulate", parents=[common], help="generate a benchmark ensemble")
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--T", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--set", dest="overrides", action="append", metavar="KEY=VALUE",
                   help="override a model constant, e.g. gamma_21=0.2")
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("analyze", parents=[common], help="infer a network from an ensemble CSV")
    p.add_argument("input")
    p.add_argument("--method", choices=METHODS)
    _add_config_flags(p)
    p.add_argument("--surrogates", type=int, help="surrogate draws for the LM null")
    p.add_argument("--out", help="affinity JSON path (CSV written alongside)")

    p = sub.add_parser("evaluate", parents=[common], help="score an affinity file against a truth CSV")
    p.add_argument("--affinity")
    p.add_argument("--truth")

    p = sub.add_parser("benchmark", parents=[common], help="repeated simulation + analysis grid")
    p.add_argument("--suite", help="'all' or comma-separated model names")
    p.add_argument("--methods", help="comma-separated subset of lsngc,lm")
    p.add_argument("--runs", type=int)
    p.add_argument("--lengths", help="comma-separated series lengths")
    _add_config_flags(p)
    p.add_argument("--surrogates", type=int)
    p.add_argument("--out", help="output directory")
    return parser


def resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge built-in defaults, the config file, then explicit flags."""
    merged = dict(defaults)
    if getattr(args, "config", None):
        try:
            doc = _read_json(args.config)
        except LsngcError as exc:
            raise UsageError(str(exc)) from None
        if not isinstance(doc, dict):
            raise UsageError(f"{args.config}: config must be a flat JSON object")
        unknown = set(doc) - set(defaults)
        if unknown:
            raise UsageError(f"{args.config}: unknown keys {sorted(unknown)}")
        merged.update(doc)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _run_config(opts: dict) -> RunConfig:
    """Build the RunConfig and write the parsed values back into ``opts``."""
    try:
        cfg = RunConfig(**{k: CONFIG_KEYS[k](opts[k]) for k in CONFIG_KEYS})
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    opts.update(cfg.to_dict())
    return cfg


def _config_defaults() -> dict:
    return RunConfig().to_dict()


def _echo(command: str, opts: dict) -> None:
    print(json.dumps({"command": command, "config": opts}, sort_keys=True))


def _parse_overrides(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--set {key}: not a number: {value!r}") from None
    return out


def cmd_simulate(args) -> int:
    opts = resolve(args, {"model": "two_logistic", "T": 500, "burn_in": 50, "seed": 0,
                          "overrides": {}, "out": ".", "workers": 1})
    if isinstance(opts["overrides"], list):
        opts["overrides"] = _parse_overrides(opts["overrides"])
    if opts["model"] not in MODELS:
        raise UsageError(f"unknown model {opts['model']!r}; choose from {', '.join(MODELS)}")
    try:
        spec = SimulationSpec(opts["model"], opts["T"], opts["burn_in"], opts["seed"], opts["overrides"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _echo("simulate", opts)
    ensemble, truth = generate(spec)
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_ensemble(ensemble, out / "ensemble.csv")
    write_adjacency(truth, ensemble.series_names, out / "truth.csv")
    _write_json(spec.to_dict(), out / "spec.json")
    print(f"wrote {out / 'ensemble.csv'}, {out / 'truth.csv'}, {out / 'spec.json'}")
    return 0


def _print_edges(names, score, p, mask, label) -> None:
    edges = [(p[s, r], names[s], names[r], score[s, r]) for s, r in zip(*np.nonzero(mask))]
    edges.sort(key=lambda e: (e[0], e[1], e[2]))
    print(f"{len(edges)} significant edges")
    print(f"source\ttarget\t{label}\tp")
    for pv, s, r, v in edges:
        print(f"{s}\t{r}\t{v:.6g}\t{pv:.3g}")


def cmd_analyze(args) -> int:
    defaults = {**_config_defaults(), "method": "lsngc", "surrogates": 100,
                "out": "affinity.json", "workers": 1}
    opts = resolve(args, defaults)
    config = _run_config(opts)
    _echo("analyze", opts)
    ensemble = read_ensemble(args.input)
    out = Path(opts["out"])
    if opts["method"] == "lsngc":
        aff = lsngc_affinity(ensemble, config, workers=opts["workers"])
        write_affinity(aff, out)
        _print_edges(aff.series_names, aff.f_stat, aff.p_value, aff.significant, "F")
    else:
        d = select_lag(ensemble, config)
        cm = cross_map_score(ensemble, d)
        p = lm_pvalues(ensemble, cm, opts["surrogates"], config.seed)
        mask = mask_from_pvalues(p, config.alpha)
        doc = {
            "method": "lm",
            "series_names": list(ensemble.series_names),
            "score": matrix_to_json(cm.score),
            "p_value": matrix_to_json(p),
            "significant": matrix_to_json(mask, kind=int),
            "diagonal": "undefined",
            "diagnostics": {"d": d, "k": cm.neighbor_count, "surrogates": opts["surrogates"],
                            "config": config.to_dict()},
        }
        _write_json(doc, out)
        write_matrix_csv(cm.score, ensemble.series_names, out.with_suffix(".csv"))
        _print_edges(ensemble.series_names, cm.score, p, mask, "score")
    print(f"wrote {out}")
    return 0


def cmd_evaluate(args) -> int:
    opts = resolve(args, {"affinity": None, "truth": None, "workers": 1})
    if not opts["affinity"] or not opts["truth"]:
        raise UsageError("evaluate needs --affinity and --truth")
    for key in ("affinity", "truth"):
        if not Path(opts[key]).is_file():
            raise LsngcError(f"{key} file not found: {opts[key]}")
    doc = _read_json(opts["affinity"])
    truth = read_adjacency(opts["truth"])
    if doc.get("method") == "lm":
        scores = matrix_from_json(doc["score"])
        mask = matrix_from_json(doc["significant"], fill=0)
    else:
        aff = read_affinity(opts["affinity"])
        eps = aff.diagnostics.get("config", {}).get("epsilon_log", RunConfig().epsilon_log)
        scores = log_transform(aff, eps)
        mask = aff.significant
    if scores.shape != truth.edges.shape:
        raise LsngcError(f"dimension mismatch: affinity is {scores.shape[0]} x {scores.shape[1]}, "
                         f"truth is {truth.edges.shape[0]} x {truth.edges.shape[1]}")
    sens, spec = sens_spec(mask, truth)
    score = RecoveryScore(roc_auc(scores, truth), sens, spec)
    print(json.dumps({"auc": score.auc, "sensitivity": score.sensitivity,
                      "specificity": score.specificity, "combined": score.combined}))
    return 0


def _split(text, cast=str):
    return [cast(x.strip()) for x in str(text).split(",") if x.strip()]


def cmd_benchmark(args) -> int:
    defaults = {**_config_defaults(), "suite": "all", "methods": "lsngc,lm", "runs": 50,
                "lengths": ",".join(map(str, DEFAULT_LENGTHS)), "surrogates": 100,
                "out": "benchmark", "workers": 1}
    opts = resolve(args, defaults)
    config = _run_config(opts)
    suite = list(MODELS) if opts["suite"] == "all" else _split(opts["suite"])
    bad = [m for m in suite if m not in MODELS]
    if bad:
        raise UsageError(f"unknown models {bad}; choose from {', '.join(MODELS)}")
    methods = _split(opts["methods"])
    if any(m not in METHODS for m in methods):
        raise UsageError(f"methods must be drawn from {METHODS}")
    try:
        lengths = _split(opts["lengths"], int)
    except ValueError:
        raise UsageError(f"--lengths must be comma-separated integers, got {opts['lengths']!r}") from None
    _echo("benchmark", opts)
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    reports, rows = [], []
    status = 0
    try:
        for model in suite:
            for method in methods:
                for rep in run_benchmark(SimulationSpec(model, seed=config.seed), method, opts["runs"],
                                         lengths, config, opts["workers"], opts["surrogates"]):
                    reports.append({**rep.to_dict(), "config": opts})
                    rows.extend(rep.csv_rows())
                    med = rep.median()
                    print(f"{model}\t{method}\tT={rep.T}\tmedian AUC={med:.3f}", flush=True)
    except LsngcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        status = 1
    finally:
        _write_json(reports, out / "report.json")
        with (out / "report.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["network", "method", "T", "run", "auc", "sens", "spec"])
            w.writerows(rows)
    print(f"wrote {out / 'report.json'}, {out / 'report.csv'}")
    return status


COMMANDS = {
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "evaluate": cmd_evaluate,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"lsngc: error: {exc}", file=sys.stderr)
        return 2
    except LsngcError as exc:
        print(f"lsngc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line runner: ``pnrtomo {state-tomo,channel-tomo,variance-curves} --config FILE``.

Exit status is 0 on success, 2 for a bad config or bad flags, 3 when the
requested object violates a physical invariant and 4 when the measured
averages are mutually inconsistent. Errors are also written to stderr as one
JSON line ``{"error": <category>, "message": ...}``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Optional, Sequence

from . import config as cfg
from . import curves
from . import report as rp
from .channel import GaussianChannel
from .channel_tomography import expected_count as channel_count
from .channel_tomography import make_channel_plan, tomograph_channel
from .errors import ConfigError, InconsistentMeasurements, InvariantViolation
from .state import symplectic_eigenvalues
from .state_tomography import expected_count as state_count
from .state_tomography import tomograph_state

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_INCONSISTENT = 0, 2, 3, 4
COMMANDS = {"state-tomo": "state", "channel-tomo": "channel", "variance-curves": "variance-curves"}
CLI_ROOT_POLICIES = ("min-norm", "min-n", "report-both")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _seed(text: str) -> int:
    try:
        val = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {val}")
    return val


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pnrtomo", description="Gaussian state and channel tomography from photon counts.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, metavar="PATH")
        s.add_argument("--out", metavar="PATH", help="report file (default: [output].report, else stdout)")
        s.add_argument("--seed", type=_seed, metavar="U64", help="override [budget].seed")
        s.add_argument("--shots", metavar="M|exact", help="override [budget].shots")
        s.add_argument("--root-policy", choices=CLI_ROOT_POLICIES, help="override [estimator].root_policy")
    return p


def _apply_overrides(conf: cfg.ExperimentConfig, args) -> tuple[cfg.ExperimentConfig, dict]:
    over = {}
    budget = conf.budget
    if args.seed is not None:
        budget = replace(budget, seed=args.seed)
        over["seed"] = args.seed
    if args.shots is not None:
        budget = replace(budget, shots=cfg.parse_shots(args.shots))
        over["shots"] = args.shots
    conf = replace(conf, budget=budget)
    if args.root_policy is not None:
        conf = replace(conf, root_policy=args.root_policy)
        over["root_policy"] = args.root_policy
    return conf, over


def _budget_doc(budget) -> dict:
    return {"shots": "exact" if budget.shots is None else budget.shots, "seed": budget.seed,
            "per_setting": dict(budget.per_setting)}


def _header(conf, over, n) -> dict:
    return {
        "schema_version": cfg.SCHEMA_VERSION,
        "kind": conf.kind,
        rp.TIMESTAMP_FIELD: rp.timestamp(),
        "config": {"file": conf.raw, "overrides": over},
        "n": n,
    }


def run_state(conf: cfg.ExperimentConfig, over: dict) -> dict:
    true = cfg.build_state(conf.target)
    est = tomograph_state(true, conf.budget, project=conf.project)
    doc = _header(conf, over, true.n)
    estimate = {"d": est.d, "V": est.V}
    if est.projected is not None:
        estimate["V_projected"] = est.projected
    doc.update({
        "setting_count": est.n_settings,
        "expected_setting_count": state_count(true.n),
        "budget": _budget_doc(conf.budget),
        "true": {"d": true.d, "V": true.V},
        "estimate": estimate,
        "errors": {"d": rp.error_block(est.d, true.d), "V": rp.error_block(est.V, true.V)},
        "residuals": dict(est.residuals),
        "diagnostics": {
            "physical": est.physical,
            "physicality_margin": est.state.margin,
            "symplectic_eigenvalues": symplectic_eigenvalues(est.V),
            "trace_v": est.trace_v,
            "mean_photon": est.n_bar,
            "projected": est.projected is not None,
        },
    })
    return doc


def run_channel(conf: cfg.ExperimentConfig, over: dict) -> dict:
    true: GaussianChannel = cfg.build_channel(conf.target)
    plan = make_channel_plan(true.n, conf.probes, conf.amplitudes)
    est = tomograph_channel(true, conf.budget, plan, conf.root_policy)
    doc = _header(conf, over, true.n)
    doc.update({
        "setting_count": est.n_settings,
        "expected_setting_count": channel_count(true.n),
        "budget": _budget_doc(conf.budget),
        "true": {"A": true.A, "B": true.B},
        "estimate": {"A": est.A, "B": est.B},
        "errors": {"A": rp.error_block(est.A, true.A), "B": rp.error_block(est.B, true.B)},
        "residuals": dict(est.residuals),
        "diagnostics": {
            "cp": est.cp_ok,
            "cp_margin": est.cp_margin,
            "true_cp_margin": true.cp_margin,
            "root_policy": est.policy,
            "probes": plan.probes,
            "probe_amplitudes": est.amplitudes,
            "root_alternatives": [{"choice": list(c), "cp_margin": m} for c, m in est.alternatives],
        },
        "root_selection": list(est.root_log),
    })
    return doc


def _csv_path(conf, out_flag: Optional[str]) -> Path:
    """``--out`` wins, then ``[output].csv``, then the report path, then a fixed default."""
    if out_flag:
        return Path(out_flag).with_suffix(".csv")
    if conf.csv:
        return Path(conf.csv)
    if conf.report:
        return Path(conf.report).with_suffix(".csv")
    return Path("variance_curves.csv")


def run_curves(conf: cfg.ExperimentConfig, over: dict, out_flag: Optional[str]) -> dict:
    single, two_mode, u = cfg.curve_recipe(conf.target)
    header, rows = curves.variance_curves(conf.sweep, single, two_mode, u)
    path = _csv_path(conf, out_flag)
    curves.write_csv(path, header, rows)
    n = 1 if single is not None else 2
    doc = _header(conf, over, n)
    recipe = {"single": asdict(single)} if n == 1 else {"two_mode": [asdict(p) for p in two_mode], "u": u}
    doc.update({
        "recipe": recipe,
        "sweep": asdict(conf.sweep),
        "csv": str(path),
        "columns": header,
        "rows": int(len(rows)),
    })
    return doc


def _fail(category: str, code: int, exc: Exception) -> int:
    msg = str(exc.args[0]) if isinstance(exc, KeyError) and exc.args else str(exc)
    print(json.dumps({"error": category, "message": msg}), file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        conf = cfg.load(args.config)
        expected = COMMANDS[args.command]
        if conf.kind != expected:
            raise ConfigError(f"config kind {conf.kind!r} does not match command {args.command!r}")
        conf, over = _apply_overrides(conf, args)
        out = args.out or conf.report
        if conf.kind == "state":
            doc = run_state(conf, over)
        elif conf.kind == "channel":
            doc = run_channel(conf, over)
        else:
            doc = run_curves(conf, over, args.out)
        text = rp.dumps(doc) + "\n"
        if out:
            Path(out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    except ConfigError as exc:
        return _fail("config", EXIT_CONFIG, exc)
    except InvariantViolation as exc:
        return _fail("invariant", EXIT_INVARIANT, exc)
    except InconsistentMeasurements as exc:
        return _fail("inconsistent-measurements", EXIT_INCONSISTENT, exc)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: one subcommand per pipeline.

Configuration comes from flags or a JSON config file (flags win).  Exit
codes: 0 success, 1 contradiction detected with --fail-on-contradiction,
2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import replace
from typing import Any, Mapping

import numpy as np

from . import optimize, scenario
from .hilbert import DIR_X, DIR_Z, Direction, spin_measurement, spin_state
from .ontic import ENUMERATION_CAP, MeasurementSet, check_reproduction
from .optimize import (
    LP_TOL,
    LpError,
    bclm_from_inner,
    dual_certificate_gap,
    embedded_povm,
    make_overlap_report,
    max_classical_overlap,
    pbr_two_copy_povm,
    pbr_two_copy_states,
    quantum_overlap,
    verify_antidistinguishing,
)
from .report import RunReport, emit_json, emit_trials_csv

EXIT_OK = 0
EXIT_CONTRADICTION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

THREADS_ENV = "ONTIC_NOGO_THREADS"


class ConfigError(ValueError):
    pass


def _parse_direction(value: Any) -> Direction:
    """Accept 'polar,azimuth' strings or [polar, azimuth] pairs (radians)."""
    if isinstance(value, Direction):
        return value
    if isinstance(value, str):
        parts = value.split(",")
    else:
        parts = list(value)
    if len(parts) != 2:
        raise ConfigError(f"direction needs polar,azimuth, got {value!r}")
    try:
        polar, azimuth = float(parts[0]), float(parts[1])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad direction {value!r}: {exc}") from exc
    try:
        return Direction(polar, azimuth)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _direction_echo(d: Direction) -> list[float]:
    return [d.polar, d.azimuth]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ontic-nogo",
        description="Encapsulated-measurement scenarios and the classical-overlap LP.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=None, help="root RNG seed (omit for entropy)")
        p.add_argument("--config", default=None, help="JSON config file; flags win")
        p.add_argument("--out", default=None, help="write the JSON report here (default stdout)")
        p.add_argument("--threads", type=int, default=None,
                       help=f"trial worker threads (default ${THREADS_ENV} or 1)")
        p.add_argument("--fail-on-contradiction", action="store_true",
                       help="exit 1 when a contradiction certificate is emitted")

    p = sub.add_parser("em-basic", help="single-friend measurement plus verification")
    common(p)

    p = sub.add_parser("argument-one", help="free-choice routing protocol")
    common(p)
    p.add_argument("--n1", default=None, help="first inner basis as polar,azimuth radians")
    p.add_argument("--n2", default=None, help="second inner basis as polar,azimuth radians")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--no-superdeterminism", dest="no_superdeterminism",
                   action="store_const", const=True, default=None,
                   help="grant the routing coin counterfactual freedom")
    p.add_argument("--trials-csv", default=None, help="also write the trial table as CSV")

    p = sub.add_parser("argument-two", help="null-signal protocol")
    common(p)
    p.add_argument("--t0", type=float, default=None, help="signal arrival time (time units)")

    p = sub.add_parser("overlap-lp", help="max classical overlap via the simplex engine")
    common(p)
    p.add_argument("--state-a", default=None, help="spin-up direction of the first state")
    p.add_argument("--state-b", default=None, help="spin-up direction of the second state")
    p.add_argument("--measurements", nargs="+", default=None,
                   help="spin measurement directions, each polar,azimuth")
    p.add_argument("--antidistinguish", action="store_const", const=True, default=None,
                   help="run the two-copy antidistinguishing demonstration")
    p.add_argument("--lp-cap", type=int, default=None, help="ontic enumeration cap")
    p.add_argument("--lp-tol", type=float, default=None, help="LP tolerance override")
    p.add_argument("--exact", action="store_const", const=True, default=None,
                   help="pivot in exact rational arithmetic")

    p = sub.add_parser("bclm", help="dimension bound from an inner-product magnitude")
    common(p)
    p.add_argument("--inner", type=float, default=None, help="|<a|b>| in [0, 1]")
    p.add_argument("--dim", type=int, default=None, help="Hilbert-space dimension d >= 2")
    return parser


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def _resolve(args: argparse.Namespace, file_cfg: Mapping, key: str, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in file_cfg:
        return file_cfg[key]
    return default


def _resolve_seed(args, file_cfg) -> int:
    seed = _resolve(args, file_cfg, "seed")
    if seed is None:
        seed = int(np.random.SeedSequence().entropy) % (2**63)
    return int(seed)


def _resolve_threads(args, file_cfg) -> int:
    threads = _resolve(args, file_cfg, "threads")
    if threads is None:
        threads = os.environ.get(THREADS_ENV, "1")
    try:
        threads = int(threads)
    except ValueError as exc:
        raise ConfigError(f"bad thread count {threads!r}") from exc
    if threads < 1:
        raise ConfigError("thread count must be >= 1")
    return threads


def _cmd_em_basic(args, file_cfg) -> tuple[RunReport, bool]:
    seed = _resolve_seed(args, file_cfg)
    result = scenario.run_em_basic(seed=seed)
    config = {"out": _resolve(args, file_cfg, "out")}
    details = {
        "branch_probs": list(result.branch_probs),
        "verification_probs": list(result.verification_probs),
        "verification_outcome": result.verification_outcome,
        "post_fidelity": result.post_fidelity,
        "repeat_outcomes": list(result.repeat_outcomes),
    }
    return RunReport(kind="em-basic", config=config, seed=seed, details=details), False


def _cmd_argument_one(args, file_cfg) -> tuple[RunReport, bool]:
    seed = _resolve_seed(args, file_cfg)
    threads = _resolve_threads(args, file_cfg)
    n1 = _parse_direction(_resolve(args, file_cfg, "n1", [0.0, 0.0]))
    n2 = _parse_direction(_resolve(args, file_cfg, "n2", [math.pi / 2.0, 0.0]))
    trials = int(_resolve(args, file_cfg, "trials", 1000))
    flag = bool(_resolve(args, file_cfg, "no_superdeterminism", False))
    result = scenario.run_argument_one(
        n1, n2, trials, seed, no_superdeterminism=flag, threads=threads
    )
    zz = sum(1 for r in result.records if r.f_basis == scenario.BASIS_Z)
    n1_count = sum(1 for r in result.records if r.f_basis == scenario.BASIS_N1)
    forced = any(len(e.state_labels()) > 1 for e in result.ledger.entries)
    overlap = make_overlap_report(
        omega_q=quantum_overlap(result.pair_fidelity),
        dimension=result.states[0][1].dim,
        pbr_disjoint_required=result.pair_fidelity < 1.0 - scenario.DISTINCT_FIDELITY_TOL,
        forced_overlap_claim=forced,
    )
    config = {
        "n1": _direction_echo(n1),
        "n2": _direction_echo(n2),
        "trials": trials,
        "no_superdeterminism": flag,
        "threads": threads,
        "out": _resolve(args, file_cfg, "out"),
        "trials_csv": _resolve(args, file_cfg, "trials_csv"),
    }
    details = {
        "pair_fidelity": result.pair_fidelity,
        "fprime_up_count": zz,
        "n1_count": n1_count,
        "n2_count": trials - zz - n1_count,
        "certificate_count": len(result.certificates),
    }
    rep = RunReport(
        kind="argument-one",
        config=config,
        seed=seed,
        details=details,
        trials=result.records,
        ledger=result.ledger,
        fidelities=result.fidelity_table(),
        certificates=result.certificates,
        overlap=overlap,
    )
    return rep, bool(result.certificates)


def _cmd_argument_two(args, file_cfg) -> tuple[RunReport, bool]:
    seed = _resolve_seed(args, file_cfg)
    t0 = float(_resolve(args, file_cfg, "t0", 1.0))
    result = scenario.run_argument_two(t0, seed=seed)
    config = {"t0": t0, "out": _resolve(args, file_cfg, "out")}
    details = {
        "f_outcome": result.f_outcome,
        "ontic_label_start": result.ontic_label_start,
        "ontic_label_t0": result.ontic_label_t0,
        "token_persisted": result.ontic_label_start == result.ontic_label_t0,
        "assignment_fidelity": float(
            scenario.fidelity(result.psi, result.updated)
        ),
    }
    certs = (result.certificate,) if result.certificate is not None else ()
    key = (scenario.PRODUCT_LAB, scenario.PSI_LAB)
    rep = RunReport(
        kind="argument-two",
        config=config,
        seed=seed,
        details=details,
        ledger=result.ledger,
        fidelities={key: details["assignment_fidelity"]},
        certificates=certs,
        overlap=result.overlap,
    )
    return rep, result.certificate is not None


def _overlap_measurement_set(directions) -> MeasurementSet:
    items = tuple(
        (f"m{i}", spin_measurement(d)) for i, d in enumerate(directions)
    )
    return MeasurementSet(items)


def _cmd_overlap_lp(args, file_cfg) -> tuple[RunReport, bool]:
    seed = _resolve_seed(args, file_cfg)
    cap = int(_resolve(args, file_cfg, "lp_cap", ENUMERATION_CAP))
    tol = float(_resolve(args, file_cfg, "lp_tol", LP_TOL))
    exact = bool(_resolve(args, file_cfg, "exact", False))
    anti = bool(_resolve(args, file_cfg, "antidistinguish", False))
    state_a_raw = _resolve(args, file_cfg, "state_a")
    state_b_raw = _resolve(args, file_cfg, "state_b")
    meas_raw = _resolve(args, file_cfg, "measurements")
    if anti and (state_a_raw is not None or state_b_raw is not None):
        raise ConfigError(
            "--antidistinguish ships a fixed two-copy fixture for the default pair; "
            "custom states are not supported with it"
        )
    dir_a = _parse_direction(state_a_raw) if state_a_raw is not None else DIR_Z
    dir_b = _parse_direction(state_b_raw) if state_b_raw is not None else DIR_X
    meas_dirs = (
        [_parse_direction(v) for v in meas_raw] if meas_raw is not None else [DIR_Z, DIR_X]
    )

    states = {"a": spin_state(dir_a, True), "b": spin_state(dir_b, True)}
    ms = _overlap_measurement_set(meas_dirs)
    result = max_classical_overlap(states, ms, cap=cap, exact=exact, tol=tol)
    repro = check_reproduction(result.witness, states, ms)
    details = {
        "omega_c_max": result.omega_c_max,
        "lp_status": result.solution.status,
        "lp_iterations": result.solution.iterations,
        "duality_gap": dual_certificate_gap(result.problem, result.solution),
        "witness_residual": repro.max_residual,
        "witness_weights": {
            e.label: [float(w) for w in e.weights] for e in result.witness.epistemics
        },
    }
    pair_fid = scenario.fidelity(states["a"], states["b"])
    overlap = make_overlap_report(
        omega_q=quantum_overlap(pair_fid),
        omega_c_max=result.omega_c_max,
        dimension=states["a"].dim,
        pbr_disjoint_required=pair_fid < 1.0 - scenario.DISTINCT_FIDELITY_TOL,
        forced_overlap_claim=False,
    )

    if anti:
        four = pbr_two_copy_states()
        povm = pbr_two_copy_povm()
        check = verify_antidistinguishing(povm, list(four.values()))
        locals_ms = MeasurementSet(
            (
                ("z1", embedded_povm(spin_measurement(DIR_Z), "left", 2)),
                ("x1", embedded_povm(spin_measurement(DIR_X), "left", 2)),
                ("z2", embedded_povm(spin_measurement(DIR_Z), "right", 2)),
                ("x2", embedded_povm(spin_measurement(DIR_X), "right", 2)),
            )
        )
        before = max_classical_overlap(four, locals_ms, cap=cap, tol=tol)
        after = max_classical_overlap(
            four, locals_ms.with_measurement("pbr", povm), cap=cap, tol=tol
        )
        details["antidistinguish"] = {
            "verified": check.antidistinguishing,
            "max_deviation": check.max_deviation,
            "omega_c_before": before.omega_c_max,
            "omega_c_after": after.omega_c_max,
        }

    config = {
        "state_a": _direction_echo(dir_a),
        "state_b": _direction_echo(dir_b),
        "measurements": [_direction_echo(d) for d in meas_dirs],
        "antidistinguish": anti,
        "lp_cap": cap,
        "lp_tol": tol,
        "exact": exact,
        "out": _resolve(args, file_cfg, "out"),
    }
    rep = RunReport(
        kind="overlap-lp", config=config, seed=seed, details=details, overlap=overlap
    )
    return rep, overlap.contradiction


def _cmd_bclm(args, file_cfg) -> tuple[RunReport, bool]:
    seed = _resolve_seed(args, file_cfg)
    inner = _resolve(args, file_cfg, "inner")
    dim = _resolve(args, file_cfg, "dim")
    if inner is None or dim is None:
        raise ConfigError("bclm needs --inner and --dim")
    try:
        overlap = bclm_from_inner(float(inner), int(dim))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    config = {"inner": float(inner), "dim": int(dim), "out": _resolve(args, file_cfg, "out")}
    details = {"omega_q": overlap.omega_q, "bclm_bound": overlap.bclm_bound}
    rep = RunReport(kind="bclm", config=config, seed=seed, details=details, overlap=overlap)
    return rep, False


_HANDLERS = {
    "em-basic": _cmd_em_basic,
    "argument-one": _cmd_argument_one,
    "argument-two": _cmd_argument_two,
    "overlap-lp": _cmd_overlap_lp,
    "bclm": _cmd_bclm,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.perf_counter()
    try:
        file_cfg = _load_config_file(args.config)
        rep, contradiction = _HANDLERS[args.command](args, file_cfg)
        rep = replace(rep, timing_seconds=time.perf_counter() - started)
        data = emit_json(rep)
        out_path = _resolve(args, file_cfg, "out")
        if out_path:
            with open(out_path, "wb") as fh:
                fh.write(data)
        else:
            sys.stdout.buffer.write(data)
            sys.stdout.buffer.flush()
        csv_path = _resolve(args, file_cfg, "trials_csv")
        if csv_path:
            with open(csv_path, "wb") as fh:
                fh.write(emit_trials_csv(rep.trials))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LpError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if contradiction and args.fail_on_contradiction:
        return EXIT_CONTRADICTION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

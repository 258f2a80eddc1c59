"""Stable machine-readable run reports.

Canonical JSON: keys sorted, floats at 17 significant digits, newline
terminated, no whitespace.  Equal inputs produce byte-identical output, and
parse/re-emit is a byte-level fixed point, so reports can be golden-filed.
Wall-clock timing is deliberately kept out of the canonical bytes; it lives
on the report object only.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .optimize import OverlapReport
from .scenario import (
    ContradictionCertificate,
    EmncLedger,
    TrialRecord,
)

SCHEMA_VERSION = 1

KINDS = ("argument-one", "argument-two", "em-basic", "overlap-lp", "bclm")


def _format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError("canonical JSON does not carry NaN or infinity")
    s = format(float(x), ".17g")
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def _canon(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, Mapping):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"object keys must be strings, got {type(key).__name__}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _canon(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _canon(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def canonical_json_bytes(obj: Any) -> bytes:
    parts: list[str] = []
    _canon(obj, parts)
    parts.append("\n")
    return "".join(parts).encode("utf-8")


def reemit(data: bytes) -> bytes:
    """Parse canonical JSON and serialize it again (a byte fixed point)."""
    return canonical_json_bytes(json.loads(data.decode("utf-8")))


# ---------------------------------------------------------------------------
# Payload shapes


def trial_payload(r: TrialRecord) -> dict:
    return {
        "trial": r.trial_index,
        "fprime": r.fprime_outcome,
        "f_basis": r.f_basis,
        "f_outcome": r.f_outcome,
        "routed_to": r.routed_to,
        "assigned_state": r.assigned_state,
    }


def pair_key(a: str, b: str) -> str:
    return "|".join(sorted((a, b)))


def ledger_payload(
    ledger: EmncLedger, fidelities: Mapping[tuple[str, str], float]
) -> dict:
    return {
        "no_superdeterminism": ledger.no_superdeterminism,
        "entries": [
            {
                "trial": e.trial_index,
                "ontic_label": e.ontic_label,
                "claims": [
                    {"state": c.state_label, "provenance": c.provenance} for c in e.claims
                ],
            }
            for e in ledger.entries
        ],
        "fidelities": {pair_key(a, b): float(f) for (a, b), f in fidelities.items()},
    }


def certificate_payload(c: ContradictionCertificate) -> dict:
    return {
        "trial": c.trial_index,
        "state_pair": list(c.state_pair),
        "fidelity": c.fidelity,
        "verdict": c.verdict,
    }


def overlap_payload(o: OverlapReport) -> dict:
    return {
        "omega_q": o.omega_q,
        "omega_c_max": o.omega_c_max,
        "bclm_bound": o.bclm_bound,
        "dimension": o.dimension,
        "pbr_disjoint_required": o.pbr_disjoint_required,
        "forced_overlap_claim": o.forced_overlap_claim,
        "contradiction": o.contradiction,
    }


@dataclass(frozen=True)
class RunReport:
    """Everything one pipeline run produced, ready for serialization."""

    kind: str
    config: dict
    seed: int | None
    details: dict = field(default_factory=dict)
    trials: tuple[TrialRecord, ...] = ()
    ledger: EmncLedger | None = None
    fidelities: dict = field(default_factory=dict)
    certificates: tuple[ContradictionCertificate, ...] = ()
    overlap: OverlapReport | None = None
    timing_seconds: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")

    @property
    def run_id(self) -> str:
        ident = canonical_json_bytes(
            {"kind": self.kind, "config": self.config, "seed": self.seed}
        )
        return hashlib.sha256(ident).hexdigest()[:12]

    def to_payload(self) -> dict:
        # timing_seconds is intentionally absent: identical config plus seed
        # must yield identical bytes.
        return {
            "schema_version": SCHEMA_VERSION,
            "run_id": self.run_id,
            "kind": self.kind,
            "config": self.config,
            "seed": self.seed,
            "details": self.details,
            "trials": [trial_payload(t) for t in self.trials],
            "ledger": (
                ledger_payload(self.ledger, self.fidelities)
                if self.ledger is not None
                else None
            ),
            "certificates": [certificate_payload(c) for c in self.certificates],
            "overlap": overlap_payload(self.overlap) if self.overlap is not None else None,
        }


def emit_json(r: RunReport) -> bytes:
    return canonical_json_bytes(r.to_payload())


CSV_HEADER = "trial,fprime,f_basis,f_outcome,routed_to,assigned_state"


def emit_trials_csv(records: Sequence[TrialRecord]) -> bytes:
    lines = [CSV_HEADER]
    lines.extend(
        f"{r.trial_index},{r.fprime_outcome},{r.f_basis},{r.f_outcome},"
        f"{r.routed_to},{r.assigned_state}"
        for r in records
    )
    return ("\n".join(lines) + "\n").encode("utf-8")

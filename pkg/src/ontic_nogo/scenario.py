"""Encapsulated-measurement scenarios and their ledgers.

Builds the friend-measures-inside, superobserver-verifies-outside unitaries,
runs seeded trial sequences for the free-choice routing protocol and the
null-signal protocol, and keeps a ledger of which lab-state supports each
trial's ontic token is forced into.  A token claimed by two distinct lab
states is exactly what support disjointness forbids, so those entries are
turned into contradiction certificates.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .hilbert import (
    DIR_X,
    DIR_Z,
    Direction,
    StateVector,
    SubsystemLayout,
    UnitaryOp,
    apply,
    born,
    fidelity,
    measure,
    orthonormal,
    projector,
    qudit_state,
    spin_measurement,
    spin_state,
    tensor,
    verification_measurement,
)
from .optimize import OverlapReport, make_overlap_report, quantum_overlap

UP = "up"
DOWN = "down"
W1 = "W1"
W2 = "W2"
BASIS_Z = "z"
BASIS_N1 = "n1"
BASIS_N2 = "n2"
PSI_N1 = "Psi_n1"
PSI_N2 = "Psi_n2"
PSI_LAB = "Psi"
PRODUCT_LAB = "Product"
ACTUAL = "actual"
COUNTERFACTUAL = "counterfactual"
PBR_VERDICT = "violates-PBR-disjointness"

DISTINCT_FIDELITY_TOL = 1e-12
"""Two states count as different when their fidelity is below 1 minus this."""


@dataclass(frozen=True)
class FriendModel:
    """Observer memory: a ready level plus one record level per outcome.

    ``record_map`` sends (measured basis id, outcome index) to the record
    level; distinct records are orthogonal by construction, which is the
    weakest reading under which the superobserver's verification works.
    """

    label: str
    ready_index: int
    record_map: tuple[tuple[tuple[str, int], int], ...]
    record_dim: int

    def __post_init__(self) -> None:
        mapping = tuple(((str(b), int(o)), int(idx)) for (b, o), idx in self.record_map)
        object.__setattr__(self, "record_map", mapping)
        indices = [self.ready_index] + [idx for _, idx in mapping]
        if len(set(indices)) != len(indices):
            raise ValueError("ready and record indices must be distinct")
        if self.record_dim != 1 + len(mapping):
            raise ValueError(
                f"record_dim {self.record_dim} != 1 + {len(mapping)} records"
            )
        if any(idx < 0 or idx >= self.record_dim for idx in indices):
            raise ValueError("record indices out of range")

    @classmethod
    def for_bases(
        cls, label: str, basis_ids: Sequence[str], outcomes_per_basis: int = 2
    ) -> "FriendModel":
        """Ready level 0, then records in basis order, outcome-major."""
        mapping = []
        nxt = 1
        for bid in basis_ids:
            for k in range(outcomes_per_basis):
                mapping.append(((bid, k), nxt))
                nxt += 1
        return cls(label, 0, tuple(mapping), nxt)

    def record_index(self, basis_id: str, outcome: int) -> int:
        for (bid, out), idx in self.record_map:
            if bid == basis_id and out == outcome:
                return idx
        raise KeyError(f"friend {self.label!r} has no record for ({basis_id!r}, {outcome})")

    @property
    def layout(self) -> SubsystemLayout:
        return SubsystemLayout.single(self.label, self.record_dim)

    def ready_state(self) -> StateVector:
        return qudit_state(self.label, self.record_dim, self.ready_index)


def build_em_unitary(
    system_basis: Sequence[StateVector], friend: FriendModel, basis_id: str = BASIS_Z
) -> UnitaryOp:
    """Measurement-as-unitary: |s_k>|ready> -> |s_k>|record k>.

    The isometry is completed to a unitary by swapping ready with the
    record level inside each system branch; all branch phases are +1.
    """
    sys_layout = system_basis[0].layout
    ds = sys_layout.total_dim
    if len(system_basis) != ds:
        raise ValueError(f"need {ds} basis states, got {len(system_basis)}")
    if any(s.layout != sys_layout for s in system_basis):
        raise ValueError("system basis states live on different layouts")
    if not orthonormal(system_basis):
        raise ValueError("system basis is not orthonormal")
    df = friend.record_dim
    matrix = np.zeros((ds * df, ds * df), dtype=np.complex128)
    for k, sk in enumerate(system_basis):
        swap = np.eye(df)
        rec = friend.record_index(basis_id, k)
        swap[[friend.ready_index, rec]] = swap[[rec, friend.ready_index]]
        matrix += np.kron(projector(sk), swap)
    return UnitaryOp(sys_layout.concat(friend.layout), matrix)


# ---------------------------------------------------------------------------
# Ledger types


@dataclass(frozen=True)
class MembershipClaim:
    state_label: str
    provenance: str

    def __post_init__(self) -> None:
        if self.provenance not in (ACTUAL, COUNTERFACTUAL):
            raise ValueError(f"unknown provenance {self.provenance!r}")


@dataclass(frozen=True)
class LedgerEntry:
    trial_index: int
    ontic_label: str
    claims: tuple[MembershipClaim, ...]

    def state_labels(self) -> tuple[str, ...]:
        seen: list[str] = []
        for claim in self.claims:
            if claim.state_label not in seen:
                seen.append(claim.state_label)
        return tuple(seen)


@dataclass(frozen=True)
class EmncLedger:
    """Per-trial ontic tokens and the support memberships forced on them."""

    entries: tuple[LedgerEntry, ...]
    no_superdeterminism: bool

    def __post_init__(self) -> None:
        labels = [e.ontic_label for e in self.entries]
        if len(set(labels)) != len(labels):
            raise ValueError("ontic labels must be unique across entries")
        if not self.no_superdeterminism:
            for e in self.entries:
                if any(c.provenance == COUNTERFACTUAL for c in e.claims):
                    raise ValueError(
                        "counterfactual claims require the no-superdeterminism flag"
                    )


@dataclass(frozen=True)
class ContradictionCertificate:
    trial_index: int
    state_pair: tuple[str, str]
    fidelity: float
    verdict: str

    def __post_init__(self) -> None:
        if not 0.0 <= self.fidelity < 1.0:
            raise ValueError(
                f"certificate requires two different states, fidelity {self.fidelity}"
            )
        if self.verdict != PBR_VERDICT:
            raise ValueError(f"unknown verdict {self.verdict!r}")


def certificates_from_ledger(
    ledger: EmncLedger, fidelities: Mapping[tuple[str, str], float]
) -> tuple[ContradictionCertificate, ...]:
    """Re-derive certificates: one per entry and distinct-state pair.

    ``fidelities`` is keyed by sorted label pairs.  Pairs at fidelity 1 are
    the same state and prove nothing.
    """
    certs = []
    for entry in ledger.entries:
        labels = entry.state_labels()
        for i, a in enumerate(labels):
            for b in labels[i + 1 :]:
                key = (a, b) if a <= b else (b, a)
                fid = fidelities[key]
                if fid < 1.0 - DISTINCT_FIDELITY_TOL:
                    certs.append(
                        ContradictionCertificate(entry.trial_index, key, fid, PBR_VERDICT)
                    )
    return tuple(certs)


# ---------------------------------------------------------------------------
# Basic encapsulated measurement (single friend, single superobserver)


@dataclass(frozen=True)
class EmBasicResult:
    phi: StateVector
    branch_probs: tuple[float, float]
    verification_probs: tuple[float, float]
    verification_outcome: int
    post_fidelity: float
    repeat_outcomes: tuple[int, ...]


def run_em_basic(seed: int | None = 0, repeats: int = 3) -> EmBasicResult:
    """Friend measures z on a spin prepared along +x; superobserver checks.

    Returns the two-branch lab state, its branch weights, and the
    non-demolition verification statistics.
    """
    rng = np.random.default_rng(seed)
    friend = FriendModel.for_bases("F", (BASIS_Z,))
    z_basis = [spin_state(DIR_Z, True, "S"), spin_state(DIR_Z, False, "S")]
    u = build_em_unitary(z_basis, friend, BASIS_Z)
    initial = tensor(spin_state(DIR_X, True, "S"), friend.ready_state())
    phi = apply(u, initial)

    branch_up = tensor(z_basis[0], qudit_state("F", 3, friend.record_index(BASIS_Z, 0)))
    branch_down = tensor(z_basis[1], qudit_state("F", 3, friend.record_index(BASIS_Z, 1)))
    p_up = fidelity(phi, branch_up)
    p_down = fidelity(phi, branch_down)

    vm = verification_measurement(phi)
    vprobs = born(phi, vm)
    outcome, post = measure(phi, vm, rng)
    repeat_outcomes = []
    current = post
    for _ in range(repeats):
        o, current = measure(current, vm, rng)
        repeat_outcomes.append(o)
    return EmBasicResult(
        phi=phi,
        branch_probs=(float(p_up), float(p_down)),
        verification_probs=(float(vprobs[0]), float(vprobs[1])),
        verification_outcome=outcome,
        post_fidelity=float(fidelity(post, phi)),
        repeat_outcomes=tuple(repeat_outcomes),
    )


# ---------------------------------------------------------------------------
# Free-choice routing protocol (two friends, two superobservers)


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    fprime_outcome: str
    f_basis: str
    f_outcome: str
    routed_to: str
    assigned_state: str

    def __post_init__(self) -> None:
        if self.fprime_outcome not in (UP, DOWN) or self.f_outcome not in (UP, DOWN):
            raise ValueError("outcomes must be 'up' or 'down'")
        if self.fprime_outcome == UP and self.f_basis != BASIS_Z:
            raise ValueError("on an up trial the inner friend measures z")
        if self.fprime_outcome == DOWN:
            if self.f_basis not in (BASIS_N1, BASIS_N2):
                raise ValueError("on a down trial the inner friend measures n1 or n2")
            expected = W1 if self.f_basis == BASIS_N1 else W2
            if self.routed_to != expected:
                raise ValueError(f"{self.f_basis} trials belong to {expected}")
        if self.routed_to not in (W1, W2):
            raise ValueError(f"unknown superobserver {self.routed_to!r}")
        expected_state = PSI_N1 if self.routed_to == W1 else PSI_N2
        if self.assigned_state != expected_state:
            raise ValueError(f"{self.routed_to} assigns {expected_state}")


def _lab_layout_pieces():
    friend_f = FriendModel.for_bases("F", (BASIS_Z, "n"))
    friend_fp = FriendModel.for_bases("Fp", (BASIS_Z,))
    return friend_f, friend_fp


def _psi_lab_state(ni: Direction) -> StateVector:
    """Lab state a superobserver modeling inner basis ni assigns.

    Layout (S:2, F:5, Sp:2, Fp:3); F records are [ready, z-up, z-down,
    n-up, n-down], Fp records [ready, z-up, z-down].
    """
    friend_f, friend_fp = _lab_layout_pieces()
    z_basis_s = [spin_state(DIR_Z, True, "S"), spin_state(DIR_Z, False, "S")]
    z_basis_sp = [spin_state(DIR_Z, True, "Sp"), spin_state(DIR_Z, False, "Sp")]
    n_basis_s = [spin_state(ni, True, "S"), spin_state(ni, False, "S")]

    u_fp = build_em_unitary(z_basis_sp, friend_fp, BASIS_Z)
    u_z = build_em_unitary(z_basis_s, friend_f, BASIS_Z)
    u_n = build_em_unitary(n_basis_s, friend_f, "n")

    dim_sf = 2 * friend_f.record_dim
    first = np.kron(np.eye(dim_sf), u_fp.matrix)

    blocks = {friend_fp.ready_index: np.eye(dim_sf)}
    blocks[friend_fp.record_index(BASIS_Z, 0)] = u_z.matrix
    blocks[friend_fp.record_index(BASIS_Z, 1)] = u_n.matrix
    second = np.zeros((60, 60), dtype=np.complex128)
    for level, block in blocks.items():
        proj = np.zeros((friend_fp.record_dim, friend_fp.record_dim))
        proj[level, level] = 1.0
        second += np.kron(block, np.kron(np.eye(2), proj))

    layout = (
        SubsystemLayout.single("S", 2)
        .concat(friend_f.layout)
        .concat(SubsystemLayout.single("Sp", 2))
        .concat(friend_fp.layout)
    )
    lab_unitary = UnitaryOp(layout, second @ first)
    initial = tensor(
        tensor(spin_state(DIR_X, True, "S"), friend_f.ready_state()),
        tensor(spin_state(DIR_X, True, "Sp"), friend_fp.ready_state()),
    )
    return apply(lab_unitary, initial)


def build_psi_ni(i: int, n1: Direction, n2: Direction) -> StateVector:
    """Lab state assigned by superobserver W_i."""
    if i not in (1, 2):
        raise ValueError(f"superobserver index must be 1 or 2, got {i}")
    if n1.same_axis(n2):
        warnings.warn("n1 and n2 point along the same axis; the two lab states coincide")
    return _psi_lab_state(n1 if i == 1 else n2)


def argument_one_states(n1: Direction, n2: Direction) -> dict[str, StateVector]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return {PSI_N1: _psi_lab_state(n1), PSI_N2: _psi_lab_state(n2)}


def verify_superobserver(
    s: StateVector, target_label: str, registry: Mapping[str, StateVector]
) -> float:
    """Probability that the rank-one verification of the target succeeds."""
    if target_label not in registry:
        raise KeyError(f"no registered state labeled {target_label!r}")
    return float(born(s, verification_measurement(registry[target_label]))[0])


@dataclass(frozen=True)
class _TrialKit:
    """Shared immutable pieces of one protocol round, built once per run."""

    xplus_s: StateVector
    xplus_sp: StateVector
    z_meas: object
    n1_meas: object
    n2_meas: object


def _run_one_trial(index: int, rng: np.random.Generator, kit: _TrialKit) -> "TrialRecord":
    """One protocol round.  Draw order: Fp outcome, then either
    (F outcome, routing coin) on up or (basis coin, F outcome) on down."""
    fp_outcome, _ = measure(kit.xplus_sp, kit.z_meas, rng)
    if fp_outcome == 0:
        f_outcome, _ = measure(kit.xplus_s, kit.z_meas, rng)
        routed = W1 if rng.random() < 0.5 else W2
        basis = BASIS_Z
    else:
        basis = BASIS_N1 if rng.random() < 0.5 else BASIS_N2
        meas = kit.n1_meas if basis == BASIS_N1 else kit.n2_meas
        f_outcome, _ = measure(kit.xplus_s, meas, rng)
        routed = W1 if basis == BASIS_N1 else W2
    return TrialRecord(
        trial_index=index,
        fprime_outcome=UP if fp_outcome == 0 else DOWN,
        f_basis=basis,
        f_outcome=UP if f_outcome == 0 else DOWN,
        routed_to=routed,
        assigned_state=PSI_N1 if routed == W1 else PSI_N2,
    )


@dataclass(frozen=True)
class ArgumentOneResult:
    records: tuple[TrialRecord, ...]
    ledger: EmncLedger
    certificates: tuple[ContradictionCertificate, ...]
    states: tuple[tuple[str, StateVector], ...]
    pair_fidelity: float

    def state_registry(self) -> dict[str, StateVector]:
        return dict(self.states)

    def fidelity_table(self) -> dict[tuple[str, str], float]:
        return {(PSI_N1, PSI_N2): self.pair_fidelity}


def run_argument_one(
    n1: Direction,
    n2: Direction,
    trials: int,
    seed: int | None,
    no_superdeterminism: bool = True,
    threads: int = 1,
) -> ArgumentOneResult:
    """Run the free-choice routing protocol for a number of trials.

    Every trial mints a fresh ontic token with membership in the lab state
    its superobserver assigns; with the no-superdeterminism flag on, trials
    where both friends measured z also claim the other superobserver's
    state, because the routing coin could equally well have landed the
    other way for the same token.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    states = argument_one_states(n1, n2)
    pair_fid = fidelity(states[PSI_N1], states[PSI_N2])

    kit = _TrialKit(
        xplus_s=spin_state(DIR_X, True, "S"),
        xplus_sp=spin_state(DIR_X, True, "Sp"),
        z_meas=spin_measurement(DIR_Z),
        n1_meas=spin_measurement(n1),
        n2_meas=spin_measurement(n2),
    )
    children = np.random.SeedSequence(seed).spawn(trials)

    def trial(i: int) -> TrialRecord:
        return _run_one_trial(i, np.random.default_rng(children[i]), kit)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = tuple(pool.map(trial, range(trials), chunksize=256))
    else:
        records = tuple(trial(i) for i in range(trials))

    entries = []
    for rec in records:
        claims = [MembershipClaim(rec.assigned_state, ACTUAL)]
        if no_superdeterminism and rec.f_basis == BASIS_Z:
            other = PSI_N2 if rec.assigned_state == PSI_N1 else PSI_N1
            claims.append(MembershipClaim(other, COUNTERFACTUAL))
        entries.append(
            LedgerEntry(rec.trial_index, f"lambda-{rec.trial_index}", tuple(claims))
        )
    ledger = EmncLedger(tuple(entries), no_superdeterminism)
    certificates = certificates_from_ledger(ledger, {(PSI_N1, PSI_N2): pair_fid})
    return ArgumentOneResult(
        records=records,
        ledger=ledger,
        certificates=certificates,
        states=tuple(states.items()),
        pair_fidelity=float(pair_fid),
    )


# ---------------------------------------------------------------------------
# Null-signal protocol (one friend, signal qubit, one superobserver)


@dataclass(frozen=True)
class ArgumentTwoResult:
    f_outcome: str
    t0: float
    ontic_label_start: str
    ontic_label_t0: str
    psi: StateVector
    updated: StateVector
    lab_state_start: StateVector
    lab_state_t0: StateVector
    ledger: EmncLedger
    overlap: OverlapReport
    certificate: ContradictionCertificate | None


def run_argument_two(t0: float, seed: int | None = 0) -> ArgumentTwoResult:
    """Run one round of the null-signal protocol.

    On the up branch literally nothing evolves in the lab between 0 and t0,
    so the ontic token persists while the superobserver's assignment moves
    from the two-branch state to the up product: a double membership at
    fidelity 1/2.  On the down branch the signal changes the lab, the token
    changes, and no double claim arises.
    """
    if t0 <= 0.0:
        raise ValueError(f"t0 must be positive, got {t0}")
    rng = np.random.default_rng(seed)
    friend = FriendModel.for_bases("F", (BASIS_Z,))
    z_basis = [spin_state(DIR_Z, True, "S"), spin_state(DIR_Z, False, "S")]
    u_em = build_em_unitary(z_basis, friend, BASIS_Z)

    layout = (
        SubsystemLayout.single("S", 2)
        .concat(friend.layout)
        .concat(SubsystemLayout.single("L", 2))
    )
    dim = layout.total_dim
    flip = np.array([[0.0, 1.0], [1.0, 0.0]])
    signal = np.zeros((dim, dim), dtype=np.complex128)
    down_rec = friend.record_index(BASIS_Z, 1)
    for level in range(friend.record_dim):
        proj = np.zeros((friend.record_dim, friend.record_dim))
        proj[level, level] = 1.0
        gate = flip if level == down_rec else np.eye(2)
        signal += np.kron(np.eye(2), np.kron(proj, gate))
    protocol_unitary = UnitaryOp(layout, signal @ np.kron(u_em.matrix, np.eye(2)))

    lab_zero = qudit_state("L", 2, 0)
    initial = tensor(tensor(spin_state(DIR_X, True, "S"), friend.ready_state()), lab_zero)
    psi = apply(protocol_unitary, initial)

    outcome, _ = measure(spin_state(DIR_X, True, "S"), spin_measurement(DIR_Z), rng)
    rec_state = qudit_state("F", friend.record_dim, friend.record_index(BASIS_Z, outcome))
    lab_start = tensor(tensor(z_basis[outcome], rec_state), lab_zero)

    if outcome == 0:
        # Null signal: the interval unitary is the identity, token persists.
        identity = UnitaryOp(layout, np.eye(dim))
        lab_t0 = apply(identity, lab_start)
        updated = lab_t0
        token0 = token_t0 = "lambda-L-0"
        entries = (
            LedgerEntry(
                0,
                token0,
                (
                    MembershipClaim(PSI_LAB, ACTUAL),
                    MembershipClaim(PRODUCT_LAB, ACTUAL),
                ),
            ),
        )
        forced = True
    else:
        interval = UnitaryOp(layout, signal)
        lab_t0 = apply(interval, lab_start)
        updated = lab_t0
        token0, token_t0 = "lambda-L-0", "lambda-L-t0"
        entries = (
            LedgerEntry(0, token0, (MembershipClaim(PSI_LAB, ACTUAL),)),
            LedgerEntry(0, token_t0, (MembershipClaim(PRODUCT_LAB, ACTUAL),)),
        )
        forced = False

    fid = fidelity(psi, updated)
    ledger = EmncLedger(entries, no_superdeterminism=False)
    key = (PRODUCT_LAB, PSI_LAB)
    certs = certificates_from_ledger(ledger, {key: fid})
    overlap = make_overlap_report(
        omega_q=quantum_overlap(fid),
        dimension=dim,
        pbr_disjoint_required=fid < 1.0 - DISTINCT_FIDELITY_TOL,
        forced_overlap_claim=forced,
    )
    return ArgumentTwoResult(
        f_outcome=UP if outcome == 0 else DOWN,
        t0=float(t0),
        ontic_label_start=token0,
        ontic_label_t0=token_t0,
        psi=psi,
        updated=updated,
        lab_state_start=lab_start,
        lab_state_t0=lab_t0,
        ledger=ledger,
        overlap=overlap,
        certificate=certs[0] if certs else None,
    )

"""LP engine for classical-overlap questions.

The central query: how much ontic-space overlap can two (or more) epistemic
distributions share while still reproducing the Born statistics of their
quantum states on a fixed measurement set.  Solved as a linear program with
a two-phase dense simplex using Bland's rule, so every answer is
deterministic and comes with a dual certificate.  Doubles by default;
exact rational pivoting is available for small instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .hilbert import (
    DIR_X,
    DIR_Z,
    Povm,
    StateVector,
    SubsystemLayout,
    born,
    inner,
    projector,
    spin_state,
    tensor,
)
from .ontic import (
    ENUMERATION_CAP,
    EpistemicState,
    MeasurementSet,
    OnticModel,
    OnticSpace,
    enumerate_lambdas,
)

LP_TOL = 1e-9
"""Feasibility and optimality tolerance for the double-precision solver."""

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"


class LpError(RuntimeError):
    """Base class for solver failures that must never pass silently."""


class LpStallError(LpError):
    """Pivot budget exhausted; the tableau is numerically stuck."""


class LpInfeasibleError(LpError):
    """An overlap LP came back infeasible, which deterministic-lambda
    enumeration should make impossible."""


@dataclass(frozen=True)
class LpProblem:
    """maximize objective . x  subject to  a_eq x = b_eq, x >= 0.

    Right-hand sides are probabilities, so they must sit in [0, 1].
    """

    objective: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    variable_names: tuple[str, ...]

    def __post_init__(self) -> None:
        c = np.array(self.objective, dtype=np.float64).reshape(-1)
        a = np.array(self.a_eq, dtype=np.float64)
        b = np.array(self.b_eq, dtype=np.float64).reshape(-1)
        names = tuple(self.variable_names)
        if a.ndim != 2:
            raise ValueError("a_eq must be a matrix")
        m, n = a.shape
        if c.shape[0] != n or len(names) != n or b.shape[0] != m:
            raise ValueError(
                f"inconsistent problem shapes: A {a.shape}, c {c.shape}, "
                f"b {b.shape}, {len(names)} names"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("problem data must be finite")
        if np.min(b) < -LP_TOL or np.max(b) > 1.0 + LP_TOL:
            raise ValueError("rhs entries must be probabilities in [0, 1]")
        for arr in (c, a, b):
            arr.setflags(write=False)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "a_eq", a)
        object.__setattr__(self, "b_eq", b)
        object.__setattr__(self, "variable_names", names)

    @property
    def n_vars(self) -> int:
        return self.a_eq.shape[1]

    @property
    def n_rows(self) -> int:
        return self.a_eq.shape[0]


@dataclass(frozen=True)
class LpSolution:
    """Solver verdict: status, optimum, primal point and dual certificate."""

    status: str
    objective_value: float | None
    x: np.ndarray | None
    dual: np.ndarray | None
    iterations: int


def _bland_entering(r, allowed_upto, tol):
    hits = np.flatnonzero(r[:allowed_upto] > tol)
    return int(hits[0]) if hits.size else -1


def _bland_leaving(T, basis, col, rhs_col, tol):
    """Min-ratio row, ties broken by smallest basic-variable index."""
    best_row = -1
    best_ratio = None
    for i in range(T.shape[0]):
        coeff = T[i, col]
        if coeff > tol:
            ratio = T[i, rhs_col] / coeff
            if (
                best_row < 0
                or ratio < best_ratio
                or (ratio == best_ratio and basis[i] < basis[best_row])
            ):
                best_row = i
                best_ratio = ratio
    return best_row


def _pivot(T, r, basis, row, col):
    T[row] = T[row] / T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0
    T -= np.outer(col_vals, T[row])
    if r[col] != 0:
        r -= r[col] * T[row]
    basis[row] = col


def _reduced_costs(T, basis, c_ext):
    r = np.array(c_ext, copy=True)
    for i, bi in enumerate(basis):
        cb = c_ext[bi]
        if cb != 0:
            r -= cb * T[i]
    return r


def solve_lp(
    problem: LpProblem,
    exact: bool = False,
    tol: float = LP_TOL,
    max_iterations: int | None = None,
) -> LpSolution:
    """Two-phase simplex with Bland's rule on a dense tableau.

    Deterministic for a fixed problem.  ``exact=True`` pivots in rational
    arithmetic (slow, small instances only) and treats the tolerance as
    exactly zero.  A stalled tableau raises :class:`LpStallError` rather
    than returning a wrong answer.
    """
    m, n = problem.n_rows, problem.n_vars
    if exact:
        conv = np.vectorize(Fraction, otypes=[object])
        a = conv(problem.a_eq)
        b = conv(problem.b_eq)
        c = conv(problem.objective)
        zero, tol_v = Fraction(0), Fraction(0)
    else:
        a = problem.a_eq.copy()
        b = problem.b_eq.copy()
        c = problem.objective.copy()
        zero, tol_v = 0.0, tol
    if max_iterations is None:
        max_iterations = 1000 + 100 * (m + n)

    flips = np.ones(m, dtype=np.int64)
    for i in range(m):
        if b[i] < zero:
            a[i] = -a[i]
            b[i] = -b[i]
            flips[i] = -1

    # Tableau columns: n real vars, m artificials, rhs.
    rhs = n + m
    dtype = object if exact else np.float64
    T = np.zeros((m, n + m + 1), dtype=dtype)
    T[:, :n] = a
    T[:, rhs] = b
    for i in range(m):
        T[i, n + i] = 1 if exact else 1.0
    basis = list(range(n, n + m))
    kept_original_rows = list(range(m))
    iterations = 0

    # Phase 1: maximize minus the artificial mass.
    c1 = np.zeros(n + m + 1, dtype=dtype)
    for j in range(n, n + m):
        c1[j] = -1 if exact else -1.0
    r = _reduced_costs(T, basis, c1)
    while True:
        col = _bland_entering(r, n, tol_v)
        if col < 0:
            break
        row = _bland_leaving(T, basis, col, rhs, tol_v)
        if row < 0:
            raise LpStallError("phase-1 objective unbounded; tableau is corrupt")
        _pivot(T, r, basis, row, col)
        iterations += 1
        if iterations > max_iterations:
            raise LpStallError(f"no convergence within {max_iterations} pivots")
    artificial_mass = sum(
        (T[i, rhs] for i in range(T.shape[0]) if basis[i] >= n),
        zero,
    )
    if artificial_mass > (tol_v if not exact else zero):
        return LpSolution(STATUS_INFEASIBLE, None, None, None, iterations)

    # Drive leftover artificials out of the basis; drop redundant rows.
    drop: list[int] = []
    for i in range(T.shape[0]):
        if basis[i] < n:
            continue
        pivot_col = -1
        for j in range(n):
            if j not in basis and (T[i, j] > tol_v or T[i, j] < -tol_v):
                pivot_col = j
                break
        if pivot_col >= 0:
            _pivot(T, r, basis, i, pivot_col)
        else:
            drop.append(i)
    if drop:
        T = np.delete(T, drop, axis=0)
        basis = [bv for i, bv in enumerate(basis) if i not in set(drop)]
        kept_original_rows = [
            ko for i, ko in enumerate(kept_original_rows) if i not in set(drop)
        ]

    # Phase 2: the real objective, artificials barred from entering.
    c2 = np.zeros(n + m + 1, dtype=dtype)
    c2[:n] = c
    r = _reduced_costs(T, basis, c2)
    while True:
        col = _bland_entering(r, n, tol_v)
        if col < 0:
            break
        row = _bland_leaving(T, basis, col, rhs, tol_v)
        if row < 0:
            return LpSolution(STATUS_UNBOUNDED, None, None, None, iterations)
        _pivot(T, r, basis, row, col)
        iterations += 1
        if iterations > max_iterations:
            raise LpStallError(f"no convergence within {max_iterations} pivots")

    x = np.zeros(n, dtype=dtype)
    for i, bv in enumerate(basis):
        if bv < n:
            x[bv] = T[i, rhs]
    # Dual values sit in the artificial reduced costs: r[n+k] = -y_k.
    y = np.zeros(m, dtype=dtype)
    for k in kept_original_rows:
        y[k] = -r[n + k] * flips[k]
    if exact:
        x_out = np.array([float(v) for v in x])
        y_out = np.array([float(v) for v in y])
        obj = float(sum(problem.objective[j] * x[j] for j in range(n)))
    else:
        x_out, y_out = x, y
        obj = float(problem.objective @ x)
    x_out.setflags(write=False)
    y_out.setflags(write=False)
    return LpSolution(STATUS_OPTIMAL, obj, x_out, y_out, iterations)


def dual_certificate_gap(problem: LpProblem, solution: LpSolution) -> float:
    """Worst violation of the optimality certificate.

    Returns max of the duality gap |c.x - b.y| and the dual infeasibility
    max(c - A^T y); at a true optimum both are ~0.
    """
    if solution.status != STATUS_OPTIMAL:
        raise ValueError("certificate only exists for optimal solutions")
    gap = abs(float(problem.objective @ solution.x) - float(problem.b_eq @ solution.dual))
    dual_violation = float(np.max(problem.objective - problem.a_eq.T @ solution.dual))
    return max(gap, dual_violation)


# ---------------------------------------------------------------------------
# Overlap maximization


@dataclass(frozen=True)
class OverlapLpResult:
    """Optimum plus the witness model achieving it."""

    omega_c_max: float
    witness: OnticModel
    problem: LpProblem
    solution: LpSolution


def build_overlap_problem(
    states: Mapping[str, StateVector],
    ms: MeasurementSet,
    space: OnticSpace,
) -> LpProblem:
    """Assemble the overlap LP over a pre-enumerated ontic space.

    Variables: one weight block mu_label per state, a shared block t with
    t(l) <= mu_label(l) enforced through slack blocks, objective sum_l t(l).
    """
    labels = list(states)
    if len(labels) < 2:
        raise ValueError("overlap needs at least two states")
    nl = space.size
    n_states = len(labels)
    n_vars = nl * (2 * n_states + 1)
    t_off = n_states * nl
    slack_off = t_off + nl

    names: list[str] = []
    for label in labels:
        names.extend(f"mu[{label}][{i}]" for i in range(nl))
    names.extend(f"t[{i}]" for i in range(nl))
    for label in labels:
        names.extend(f"s[{label}][{i}]" for i in range(nl))

    rows: list[np.ndarray] = []
    rhs: list[float] = []
    for a, label in enumerate(labels):
        state = states[label]
        if state.dim != ms.dim:
            raise ValueError(f"state {label!r} dim {state.dim} != measurement dim {ms.dim}")
        mu_off = a * nl
        for mi, (_, povm) in enumerate(ms.items):
            probs = born(state, povm)
            for k in range(povm.n_outcomes):
                row = np.zeros(n_vars)
                hit = space.assignments[:, mi] == k
                row[mu_off : mu_off + nl][hit] = 1.0
                rows.append(row)
                rhs.append(min(max(float(probs[k]), 0.0), 1.0))
        for i in range(nl):
            row = np.zeros(n_vars)
            row[t_off + i] = 1.0
            row[mu_off + i] = -1.0
            row[slack_off + a * nl + i] = 1.0
            rows.append(row)
            rhs.append(0.0)

    objective = np.zeros(n_vars)
    objective[t_off : t_off + nl] = 1.0
    return LpProblem(objective, np.array(rows), np.array(rhs), tuple(names))


def max_classical_overlap(
    states: Mapping[str, StateVector],
    ms: MeasurementSet,
    cap: int = ENUMERATION_CAP,
    exact: bool = False,
    tol: float = LP_TOL,
) -> OverlapLpResult:
    """Largest sum_l min over the states' distributions that still
    reproduces every Born distribution in the measurement set.

    Returns the optimum together with a witness model built from the
    optimal weights; the witness always passes reproduction at the LP
    tolerance and achieves the reported overlap.
    """
    space = enumerate_lambdas(ms, cap)
    problem = build_overlap_problem(states, ms, space)
    solution = solve_lp(problem, exact=exact, tol=tol)
    if solution.status == STATUS_INFEASIBLE:
        raise LpInfeasibleError(
            "overlap LP infeasible; deterministic enumeration should reproduce "
            "any Born statistics"
        )
    if solution.status != STATUS_OPTIMAL:
        raise LpError(f"overlap LP ended with status {solution.status}")

    labels = list(states)
    nl = space.size
    epistemics = []
    for a, label in enumerate(labels):
        weights = np.clip(solution.x[a * nl : (a + 1) * nl], 0.0, None)
        total = float(weights.sum())
        if abs(total - 1.0) > 1e-6:
            raise LpError(f"witness weights for {label!r} sum to {total}")
        epistemics.append(EpistemicState(label, space, weights / total))
    witness = OnticModel.deterministic(space, epistemics, ms.outcome_counts)
    return OverlapLpResult(float(solution.objective_value), witness, problem, solution)


# ---------------------------------------------------------------------------
# Antidistinguishability


@dataclass(frozen=True)
class AntidistinguishabilityCheck:
    antidistinguishing: bool
    max_deviation: float
    deviations: tuple[float, ...]


def verify_antidistinguishing(
    povm: Povm, states: Sequence[StateVector], tol: float = LP_TOL
) -> AntidistinguishabilityCheck:
    """Check that outcome i never fires on the i-th state.

    The pairing must be exact (one effect per state): spare outcomes would
    let shared lambdas hide in them, voiding the support-disjointness
    argument the certificate exists for.
    """
    if not states:
        raise ValueError("need at least one state")
    if povm.n_outcomes != len(states):
        raise ValueError(
            f"antidistinguishing check needs exactly one effect per state, "
            f"got {povm.n_outcomes} effects for {len(states)} states"
        )
    devs = []
    for state, effect in zip(states, povm.effects):
        if state.dim != povm.dim:
            raise ValueError(f"state dim {state.dim} != POVM dim {povm.dim}")
        amps = state.amplitudes
        devs.append(abs(float(np.real(np.vdot(amps, effect @ amps)))))
    max_dev = max(devs)
    return AntidistinguishabilityCheck(max_dev <= tol, max_dev, tuple(devs))


def embedded_povm(m: Povm, side: str, other_dim: int) -> Povm:
    """Lift a POVM to a two-factor space, acting on one factor only."""
    eye = np.eye(other_dim)
    if side == "left":
        return Povm(tuple(np.kron(e, eye) for e in m.effects))
    if side == "right":
        return Povm(tuple(np.kron(eye, e) for e in m.effects))
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def pbr_two_copy_states(
    labels: tuple[str, str] = ("C1", "C2"),
) -> dict[str, StateVector]:
    """The four two-copy products of |0> and |+>, keyed 00, 0+, +0, ++."""
    zero = {lbl: spin_state(DIR_Z, up=True, label=lbl) for lbl in labels}
    plus = {lbl: spin_state(DIR_X, up=True, label=lbl) for lbl in labels}
    a, b = labels
    return {
        "00": tensor(zero[a], zero[b]),
        "0+": tensor(zero[a], plus[b]),
        "+0": tensor(plus[a], zero[b]),
        "++": tensor(plus[a], plus[b]),
    }


def pbr_two_copy_povm(labels: tuple[str, str] = ("C1", "C2")) -> Povm:
    """Four-outcome entangled measurement antidistinguishing the set above.

    Shipped as a verifiable fixture; outcome i annihilates state i of
    :func:`pbr_two_copy_states` in the same key order.
    """
    ket0 = np.array([1.0, 0.0], dtype=complex)
    ket1 = np.array([0.0, 1.0], dtype=complex)
    plus = (ket0 + ket1) / math.sqrt(2.0)
    minus = (ket0 - ket1) / math.sqrt(2.0)
    layout = SubsystemLayout.single(labels[0], 2).concat(SubsystemLayout.single(labels[1], 2))
    xi = (
        (np.kron(ket0, ket1) + np.kron(ket1, ket0)) / math.sqrt(2.0),
        (np.kron(ket0, minus) + np.kron(ket1, plus)) / math.sqrt(2.0),
        (np.kron(plus, ket1) + np.kron(minus, ket0)) / math.sqrt(2.0),
        (np.kron(plus, minus) + np.kron(minus, plus)) / math.sqrt(2.0),
    )
    effects = tuple(projector(StateVector(layout, v)) for v in xi)
    return Povm(effects)


# ---------------------------------------------------------------------------
# Quantum overlap and the dimension bound


@dataclass(frozen=True)
class OverlapReport:
    """Summary pairing quantum overlap with classical-overlap findings."""

    omega_q: float | None
    omega_c_max: float | None
    bclm_bound: float | None
    dimension: int | None
    pbr_disjoint_required: bool
    forced_overlap_claim: bool
    contradiction: bool


def quantum_overlap(fid: float) -> float:
    """Trace-distance overlap 1 - sqrt(1 - |<a|b>|^2).

    The standard choice in the overlap-bound literature; swap here if a
    fidelity-based definition is ever preferred.
    """
    return 1.0 - math.sqrt(max(0.0, 1.0 - fid))


def make_overlap_report(
    omega_q: float | None = None,
    omega_c_max: float | None = None,
    dimension: int | None = None,
    pbr_disjoint_required: bool = False,
    forced_overlap_claim: bool = False,
) -> OverlapReport:
    bound = None
    if omega_q is not None and dimension is not None:
        bound = (2.0 / dimension) * omega_q
    if omega_c_max is not None:
        disjoint_numerically = omega_c_max <= LP_TOL
    else:
        disjoint_numerically = pbr_disjoint_required
    return OverlapReport(
        omega_q=omega_q,
        omega_c_max=omega_c_max,
        bclm_bound=bound,
        dimension=dimension,
        pbr_disjoint_required=pbr_disjoint_required,
        forced_overlap_claim=forced_overlap_claim,
        contradiction=bool(forced_overlap_claim and disjoint_numerically),
    )


def bclm_from_inner(inner_mag: float, d: int) -> OverlapReport:
    """Dimension bound (2/d) * omega_q from a raw inner-product magnitude."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if not 0.0 <= inner_mag <= 1.0 + 1e-12:
        raise ValueError(f"|<a|b>| must lie in [0, 1], got {inner_mag}")
    fid = min(inner_mag, 1.0) ** 2
    return make_overlap_report(
        omega_q=quantum_overlap(fid),
        dimension=d,
        pbr_disjoint_required=fid < 1.0 - 1e-12,
    )


def bclm_bound(a: StateVector, b: StateVector, d: int | None = None) -> OverlapReport:
    """Dimension bound for a concrete state pair; d defaults to their dim."""
    if d is None:
        d = a.dim
    return bclm_from_inner(min(abs(inner(a, b)), 1.0), d)

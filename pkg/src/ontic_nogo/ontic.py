"""Finite ontic-model framework.

An ontic space here is the set of outcome-deterministic assignments over an
explicit finite measurement set; epistemic states are distributions over
that space.  General stochastic response functions are convex mixtures of
deterministic assignments once the measurement set is fixed, so nothing is
lost for reproduction and overlap questions at this scale.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .hilbert import Povm, StateVector, born

SUPPORT_EPSILON = 1e-12
"""Numerical reading of 'the distribution is positive at this point'."""

WEIGHT_SUM_ATOL = 1e-12
RESIDUAL_TOL = 1e-9
ENUMERATION_CAP = 10**6


class EnumerationCapError(ValueError):
    """Raised when an ontic space would exceed the enumeration cap."""


@dataclass(frozen=True)
class MeasurementSet:
    """Ordered, id-labeled collection of POVMs on one space."""

    items: tuple[tuple[str, Povm], ...]

    def __post_init__(self) -> None:
        items = tuple((str(mid), povm) for mid, povm in self.items)
        object.__setattr__(self, "items", items)
        if not items:
            raise ValueError("measurement set must be nonempty")
        ids = [mid for mid, _ in items]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate measurement ids in {ids}")
        dims = {povm.dim for _, povm in items}
        if len(dims) != 1:
            raise ValueError(f"measurements act on different dims: {sorted(dims)}")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(mid for mid, _ in self.items)

    @property
    def outcome_counts(self) -> tuple[int, ...]:
        return tuple(povm.n_outcomes for _, povm in self.items)

    @property
    def dim(self) -> int:
        return self.items[0][1].dim

    def povm(self, mid: str) -> Povm:
        for key, povm in self.items:
            if key == mid:
                return povm
        raise KeyError(f"no measurement with id {mid!r}")

    def with_measurement(self, mid: str, povm: Povm) -> "MeasurementSet":
        return MeasurementSet(self.items + ((mid, povm),))

    def permuted(self, order: Sequence[int]) -> "MeasurementSet":
        if sorted(order) != list(range(len(self.items))):
            raise ValueError("order must be a permutation of the measurement indices")
        return MeasurementSet(tuple(self.items[i] for i in order))


@dataclass(frozen=True)
class OnticSpace:
    """All deterministic outcome assignments for a measurement set.

    ``assignments[i, m]`` is the outcome lambda_i gives to measurement m.
    """

    measurement_ids: tuple[str, ...]
    assignments: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.assignments, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != len(self.measurement_ids):
            raise ValueError("assignment table shape does not match measurement ids")
        if len({tuple(row) for row in arr.tolist()}) != arr.shape[0]:
            raise ValueError("assignments must be distinct")
        arr.setflags(write=False)
        object.__setattr__(self, "assignments", arr)

    @property
    def size(self) -> int:
        return self.assignments.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OnticSpace):
            return NotImplemented
        return self.measurement_ids == other.measurement_ids and np.array_equal(
            self.assignments, other.assignments
        )

    __hash__ = None  # type: ignore[assignment]


def enumerate_lambdas(ms: MeasurementSet, cap: int = ENUMERATION_CAP) -> OnticSpace:
    """Canonical finite ontic space: every assignment, lexicographic order."""
    counts = ms.outcome_counts
    total = int(np.prod([int(c) for c in counts], dtype=object))
    if total > cap:
        raise EnumerationCapError(f"{total} assignments exceed the cap of {cap}")
    rows = list(itertools.product(*(range(c) for c in counts)))
    return OnticSpace(ms.ids, np.array(rows, dtype=np.int64).reshape(total, len(counts)))


@dataclass(frozen=True)
class EpistemicState:
    """Distribution over an ontic space, tagged with its state label."""

    label: str
    space: OnticSpace
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != self.space.size:
            raise ValueError(f"{w.shape[0]} weights for a space of size {self.space.size}")
        if np.min(w) < -SUPPORT_EPSILON:
            raise ValueError(f"negative weight {np.min(w):g}")
        if abs(float(np.sum(w)) - 1.0) > WEIGHT_SUM_ATOL:
            raise ValueError(f"weights sum to {np.sum(w)!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def support(self, epsilon: float = SUPPORT_EPSILON) -> np.ndarray:
        """Indices of lambdas where the distribution is positive."""
        return np.flatnonzero(self.weights > epsilon)


@dataclass(frozen=True)
class OnticModel:
    """Ontic space plus epistemic states plus the response table."""

    space: OnticSpace
    epistemics: tuple[EpistemicState, ...]
    response: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "epistemics", tuple(self.epistemics))
        labels = [e.label for e in self.epistemics]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate epistemic labels in {labels}")
        for e in self.epistemics:
            if e.space != self.space:
                raise ValueError(f"epistemic state {e.label!r} lives on a different space")
        resp = tuple(np.array(r, dtype=np.float64) for r in self.response)
        if len(resp) != len(self.space.measurement_ids):
            raise ValueError("one response block per measurement is required")
        for m, block in enumerate(resp):
            if block.shape[0] != self.space.size:
                raise ValueError(f"response block {m} has wrong lambda count")
            rows = block.sum(axis=1)
            if np.max(np.abs(rows - 1.0)) > WEIGHT_SUM_ATOL:
                raise ValueError(f"response rows for measurement {m} do not sum to 1")
            onehot = np.zeros_like(block)
            onehot[np.arange(self.space.size), self.space.assignments[:, m]] = 1.0
            if not np.array_equal(block, onehot):
                raise ValueError(
                    f"deterministic space: response block {m} must match the assignments"
                )
            block.setflags(write=False)
        object.__setattr__(self, "response", resp)

    @classmethod
    def deterministic(
        cls, space: OnticSpace, epistemics: Sequence[EpistemicState], outcome_counts: Sequence[int]
    ) -> "OnticModel":
        """Model whose response table is the one-hot image of the assignments."""
        blocks = []
        for m, count in enumerate(outcome_counts):
            block = np.zeros((space.size, count))
            block[np.arange(space.size), space.assignments[:, m]] = 1.0
            blocks.append(block)
        return cls(space, tuple(epistemics), tuple(blocks))

    def epistemic(self, label: str) -> EpistemicState:
        for e in self.epistemics:
            if e.label == label:
                return e
        raise KeyError(f"no epistemic state labeled {label!r}")

    def predicted(self, label: str, meas_index: int) -> np.ndarray:
        """Outcome distribution the model assigns: sum_l P(l) xi(k|l, M)."""
        return self.epistemic(label).weights @ self.response[meas_index]


@dataclass(frozen=True)
class ReproductionReport:
    max_residual: float
    passed: bool
    worst: tuple[str, str, int]
    """(state label, measurement id, outcome) achieving the max residual."""


def check_reproduction(
    model: OnticModel,
    states: Mapping[str, StateVector],
    ms: MeasurementSet,
    tol: float = RESIDUAL_TOL,
) -> ReproductionReport:
    """Compare model statistics against the Born rule for every state.

    The residual is max |sum_l P_psi(l) xi(k|l,M) - Born(k|psi,M)| over all
    labeled states, measurements and outcomes.
    """
    if tuple(ms.ids) != model.space.measurement_ids:
        raise ValueError("model space and measurement set disagree on measurement ids")
    worst = ("", "", -1)
    max_res = 0.0
    for label, state in states.items():
        model.epistemic(label)  # raises KeyError if the label is missing
        for m, (mid, povm) in enumerate(ms.items):
            diff = np.abs(model.predicted(label, m) - born(state, povm))
            k = int(np.argmax(diff))
            if diff[k] >= max_res:
                max_res = float(diff[k])
                worst = (label, mid, k)
    return ReproductionReport(max_res, max_res <= tol, worst)


def classical_overlap(a: EpistemicState, b: EpistemicState) -> float:
    """Total shared weight sum_l min(a(l), b(l))."""
    if a.space != b.space:
        raise ValueError("epistemic states live on different ontic spaces")
    return float(np.minimum(a.weights, b.weights).sum())


def supports_disjoint(
    a: EpistemicState, b: EpistemicState, epsilon: float = SUPPORT_EPSILON
) -> bool:
    """True when no lambda carries positive weight under both states."""
    if a.space != b.space:
        raise ValueError("epistemic states live on different ontic spaces")
    return not bool(np.any((a.weights > epsilon) & (b.weights > epsilon)))

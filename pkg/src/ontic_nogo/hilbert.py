"""Dense complex linear algebra on labeled tensor-product spaces.

Everything here is a pure function of immutable values: state vectors are
unit vectors over an explicit subsystem layout, measurements are effect
lists, and the only source of randomness is a generator passed in by the
caller.  States that differ by a global phase are considered equal; compare
them with :func:`fidelity`, never amplitude-wise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ATOL = 1e-10
"""Structural tolerance: norms, unitarity, effect completeness."""

_ZERO_NORM = 1e-12


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SubsystemLayout:
    """Ordered list of (label, dim) pairs naming a tensor-product space."""

    subsystems: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        subs = tuple((str(lbl), int(dim)) for lbl, dim in self.subsystems)
        object.__setattr__(self, "subsystems", subs)
        if not subs:
            raise ValueError("layout needs at least one subsystem")
        labels = [lbl for lbl, _ in subs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate subsystem labels in {labels}")
        if any(dim < 1 for _, dim in subs):
            raise ValueError("every subsystem dim must be >= 1")

    @classmethod
    def single(cls, label: str, dim: int) -> "SubsystemLayout":
        return cls(((label, dim),))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.subsystems)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def dim_of(self, label: str) -> int:
        for lbl, dim in self.subsystems:
            if lbl == label:
                return dim
        raise KeyError(f"no subsystem labeled {label!r}")

    def concat(self, other: "SubsystemLayout") -> "SubsystemLayout":
        """Layout of the joint space; labels must not collide."""
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise ValueError(f"label collision between layouts: {sorted(clash)}")
        return SubsystemLayout(self.subsystems + other.subsystems)


@dataclass(frozen=True)
class StateVector:
    """Normalized complex amplitude vector over a labeled layout."""

    layout: SubsystemLayout
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != self.layout.total_dim:
            raise ValueError(
                f"amplitude length {amps.shape[0]} != layout dim {self.layout.total_dim}"
            )
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > ATOL:
            raise ValueError(f"state vector norm {nrm!r} is not 1 within {ATOL}")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def dim(self) -> int:
        return self.layout.total_dim


@dataclass(frozen=True)
class UnitaryOp:
    """Square matrix with U†U = I on a labeled layout."""

    layout: SubsystemLayout
    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.array(self.matrix, dtype=np.complex128)
        d = self.layout.total_dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} != ({d}, {d})")
        dev = np.max(np.abs(mat.conj().T @ mat - np.eye(d)))
        if dev > ATOL:
            raise ValueError(f"matrix is not unitary: max |U†U - I| = {dev:g}")
        object.__setattr__(self, "matrix", _frozen(mat))


@dataclass(frozen=True)
class Povm:
    """List of Hermitian PSD effects summing to the identity."""

    effects: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        effs = tuple(np.array(e, dtype=np.complex128) for e in self.effects)
        if not effs:
            raise ValueError("a POVM needs at least one effect")
        d = effs[0].shape[0]
        total = np.zeros((d, d), dtype=np.complex128)
        for k, e in enumerate(effs):
            if e.shape != (d, d):
                raise ValueError(f"effect {k} has shape {e.shape}, expected ({d}, {d})")
            if np.max(np.abs(e - e.conj().T)) > ATOL:
                raise ValueError(f"effect {k} is not Hermitian")
            low = float(np.min(np.linalg.eigvalsh(e)))
            if low < -ATOL:
                raise ValueError(f"effect {k} has negative eigenvalue {low:g}")
            total += e
        if np.max(np.abs(total - np.eye(d))) > ATOL:
            raise ValueError("effects do not sum to the identity")
        object.__setattr__(self, "effects", tuple(_frozen(e) for e in effs))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.effects)


class ProjectiveMeasurement(Povm):
    """POVM whose effects are all orthogonal projectors.

    Idempotency plus completeness already forces mutual orthogonality, so
    only E@E = E is checked on top of the POVM invariants.
    """

    def __post_init__(self) -> None:
        super().__post_init__()
        for k, e in enumerate(self.effects):
            if np.max(np.abs(e @ e - e)) > ATOL:
                raise ValueError(f"effect {k} is not a projector")


@dataclass(frozen=True)
class Direction:
    """Point on the Bloch sphere, azimuth 0 meaning the x-z plane."""

    polar: float
    azimuth: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "polar", float(self.polar))
        object.__setattr__(self, "azimuth", float(self.azimuth))
        if not 0.0 <= self.polar <= math.pi:
            raise ValueError(f"polar {self.polar} outside [0, pi]")
        if not 0.0 <= self.azimuth < 2.0 * math.pi:
            raise ValueError(f"azimuth {self.azimuth} outside [0, 2*pi)")

    def bloch(self) -> np.ndarray:
        st = math.sin(self.polar)
        return np.array(
            [st * math.cos(self.azimuth), st * math.sin(self.azimuth), math.cos(self.polar)]
        )

    def same_axis(self, other: "Direction", atol: float = ATOL) -> bool:
        return bool(np.allclose(self.bloch(), other.bloch(), atol=atol, rtol=0.0))


DIR_Z = Direction(0.0, 0.0)
DIR_X = Direction(math.pi / 2.0, 0.0)
DIR_Y = Direction(math.pi / 2.0, math.pi / 2.0)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Joint state on the concatenated layout (Kronecker product)."""
    return StateVector(a.layout.concat(b.layout), np.kron(a.amplitudes, b.amplitudes))


def basis_state(layout: SubsystemLayout, index: int) -> StateVector:
    amps = np.zeros(layout.total_dim, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(layout, amps)


def qudit_state(label: str, dim: int, index: int) -> StateVector:
    return basis_state(SubsystemLayout.single(label, dim), index)


def spin_state(d: Direction, up: bool = True, label: str = "S") -> StateVector:
    """Qubit spin eigenstate along ``d``.

    Up is (cos t/2, e^{i a} sin t/2); down is the orthogonal complement
    (-sin t/2, e^{i a} cos t/2).  The down phase is a fixed convention,
    callers must compare states via fidelity anyway.
    """
    half = d.polar / 2.0
    phase = np.exp(1j * d.azimuth)
    if up:
        amps = np.array([math.cos(half), phase * math.sin(half)])
    else:
        amps = np.array([-math.sin(half), phase * math.cos(half)])
    return StateVector(SubsystemLayout.single(label, 2), amps)


def apply(u: UnitaryOp, s: StateVector) -> StateVector:
    if u.layout != s.layout:
        raise ValueError(f"layout mismatch: {u.layout.labels} vs {s.layout.labels}")
    return StateVector(s.layout, u.matrix @ s.amplitudes)


def inner(a: StateVector, b: StateVector) -> complex:
    """Hermitian inner product <a|b>."""
    if a.layout != b.layout:
        raise ValueError("states live on different layouts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, the phase-free comparison used throughout."""
    return abs(inner(a, b)) ** 2


def projector(s: StateVector) -> np.ndarray:
    return np.outer(s.amplitudes, s.amplitudes.conj())


def born(s: StateVector, m: Povm) -> np.ndarray:
    """Outcome distribution <s|E_k|s> as a real vector."""
    if m.dim != s.dim:
        raise ValueError(f"measurement dim {m.dim} != state dim {s.dim}")
    amps = s.amplitudes
    return np.array([float(np.real(np.vdot(amps, e @ amps))) for e in m.effects])


def project(s: StateVector, m: ProjectiveMeasurement, outcome: int) -> StateVector:
    """Normalized post-measurement state for a chosen outcome."""
    post = m.effects[outcome] @ s.amplitudes
    nrm = np.linalg.norm(post)
    if nrm < _ZERO_NORM:
        raise ValueError(f"outcome {outcome} has zero probability, cannot normalize")
    return StateVector(s.layout, post / nrm)


def measure(
    s: StateVector, m: ProjectiveMeasurement, rng: np.random.Generator
) -> tuple[int, StateVector]:
    """Sample one outcome by the Born rule and collapse.

    Repeating the measurement on the returned post-state reproduces the
    outcome with probability one.
    """
    probs = born(s, m)
    u = rng.random()
    outcome = len(probs) - 1
    acc = 0.0
    for k, p in enumerate(probs):
        acc += p
        if u < acc:
            outcome = k
            break
    return outcome, project(s, m, outcome)


def spin_measurement(d: Direction) -> ProjectiveMeasurement:
    """Two-outcome qubit measurement {|+d><+d|, |-d><-d|}, up first."""
    up = spin_state(d, up=True)
    down = spin_state(d, up=False)
    return ProjectiveMeasurement((projector(up), projector(down)))


def verification_measurement(target: StateVector) -> ProjectiveMeasurement:
    """Rank-one check {|t><t|, I - |t><t|} a superobserver uses on a lab."""
    p = projector(target)
    return ProjectiveMeasurement((p, np.eye(target.dim) - p))


def orthonormal(states: Sequence[StateVector], atol: float = ATOL) -> bool:
    """True when the states are pairwise orthogonal unit vectors."""
    for i, a in enumerate(states):
        for b in states[i + 1 :]:
            if abs(inner(a, b)) > atol:
                return False
    return True

"""Encapsulated-measurement scenario lab with an LP overlap engine."""

from .hilbert import (
    DIR_X,
    DIR_Y,
    DIR_Z,
    Direction,
    Povm,
    ProjectiveMeasurement,
    StateVector,
    SubsystemLayout,
    UnitaryOp,
    apply,
    born,
    fidelity,
    inner,
    measure,
    spin_measurement,
    spin_state,
    tensor,
    verification_measurement,
)
from .ontic import (
    EpistemicState,
    MeasurementSet,
    OnticModel,
    OnticSpace,
    check_reproduction,
    classical_overlap,
    enumerate_lambdas,
    supports_disjoint,
)
from .optimize import (
    LpProblem,
    LpSolution,
    OverlapReport,
    bclm_bound,
    bclm_from_inner,
    max_classical_overlap,
    solve_lp,
    verify_antidistinguishing,
)
from .scenario import (
    ContradictionCertificate,
    EmncLedger,
    FriendModel,
    TrialRecord,
    build_em_unitary,
    build_psi_ni,
    run_argument_one,
    run_argument_two,
    run_em_basic,
    verify_superobserver,
)
from .report import RunReport, emit_json, emit_trials_csv

__version__ = "0.1.0"

__all__ = [
    "DIR_X",
    "DIR_Y",
    "DIR_Z",
    "Direction",
    "Povm",
    "ProjectiveMeasurement",
    "StateVector",
    "SubsystemLayout",
    "UnitaryOp",
    "apply",
    "born",
    "fidelity",
    "inner",
    "measure",
    "spin_measurement",
    "spin_state",
    "tensor",
    "verification_measurement",
    "EpistemicState",
    "MeasurementSet",
    "OnticModel",
    "OnticSpace",
    "check_reproduction",
    "classical_overlap",
    "enumerate_lambdas",
    "supports_disjoint",
    "LpProblem",
    "LpSolution",
    "OverlapReport",
    "bclm_bound",
    "bclm_from_inner",
    "max_classical_overlap",
    "solve_lp",
    "verify_antidistinguishing",
    "ContradictionCertificate",
    "EmncLedger",
    "FriendModel",
    "TrialRecord",
    "build_em_unitary",
    "build_psi_ni",
    "run_argument_one",
    "run_argument_two",
    "run_em_basic",
    "verify_superobserver",
    "RunReport",
    "emit_json",
    "emit_trials_csv",
]

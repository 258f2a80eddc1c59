"""Independent oracle implementations used to pin expected values.

Nothing here goes through the package's construction paths: spin kets come
from rotation matrices, lab states from a direct tensor contraction of the
protocol's branch structure, and LP optima from brute-force enumeration of
basic feasible solutions.  Tests freeze values computed by these routines
and compare the production code against them.
"""

from __future__ import annotations

import itertools
import math
from itertools import combinations

import numpy as np


def rot_y(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rot_z(phi: float) -> np.ndarray:
    return np.diag([np.exp(-1j * phi / 2.0), np.exp(1j * phi / 2.0)])


def spin_ket(theta: float, phi: float, up: bool) -> np.ndarray:
    """Spin eigenket along (theta, phi) built from rotation matrices.

    Differs from any amplitude convention only by a global phase, which all
    comparisons downstream are insensitive to.
    """
    column = np.array([1.0, 0.0], dtype=complex) if up else np.array([0.0, 1.0], dtype=complex)
    return rot_z(phi) @ rot_y(theta) @ column


def _unit(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def lab_state_direct(n_theta: float, n_phi: float) -> np.ndarray:
    """Direct contraction of the routed-lab state on (S:2, F:5, Sp:2, Fp:3).

    F levels: ready, z-up, z-down, n-up, n-down.  Fp levels: ready, z-up,
    z-down.  Branch 1 carries amplitude 1/2 on the matched z records with
    Fp recording up; branch 2 carries (1/sqrt2) <s n|+x> on the n records
    with Fp recording down.
    """
    z_up, z_dn = _unit(2, 0), _unit(2, 1)
    x_up = (z_up + z_dn) / math.sqrt(2.0)
    n_up = spin_ket(n_theta, n_phi, True)
    n_dn = spin_ket(n_theta, n_phi, False)

    first = 0.5 * (
        np.kron(np.kron(z_up, _unit(5, 1)), np.kron(z_up, _unit(3, 1)))
        + np.kron(np.kron(z_dn, _unit(5, 2)), np.kron(z_up, _unit(3, 1)))
    )
    second = (1.0 / math.sqrt(2.0)) * (
        np.vdot(n_up, x_up) * np.kron(np.kron(n_up, _unit(5, 3)), np.kron(z_dn, _unit(3, 2)))
        + np.vdot(n_dn, x_up) * np.kron(np.kron(n_dn, _unit(5, 4)), np.kron(z_dn, _unit(3, 2)))
    )
    return first + second


def lab_pair_fidelity(n1: tuple[float, float], n2: tuple[float, float]) -> float:
    a = lab_state_direct(*n1)
    b = lab_state_direct(*n2)
    return abs(np.vdot(a, b)) ** 2


def independent_rows(a: np.ndarray, tol: float = 1e-10) -> list[int]:
    rows: list[int] = []
    rank = 0
    for i in range(a.shape[0]):
        candidate = a[rows + [i], :]
        if np.linalg.matrix_rank(candidate, tol=tol) > rank:
            rows.append(i)
            rank += 1
    return rows


def enumerate_lp_max(
    a_eq: np.ndarray, b_eq: np.ndarray, c: np.ndarray, feas_tol: float = 1e-9
) -> float | None:
    """Brute-force LP optimum over all basic feasible solutions.

    Reduces to an independent row set first, then solves every square
    column subset in one batched call.  Only for small systems; returns
    None when no basic feasible solution exists.
    """
    rows = independent_rows(a_eq)
    a = a_eq[rows]
    b = b_eq[rows]
    m, n = a.shape
    col_sets = np.array(list(combinations(range(n), m)))
    mats = a[:, col_sets].transpose(1, 0, 2)
    dets = np.abs(np.linalg.det(mats))
    keep = dets > 1e-10
    if not np.any(keep):
        return None
    sols = np.linalg.solve(mats[keep], np.broadcast_to(b, (int(keep.sum()), m)))
    feasible = np.all(sols >= -feas_tol, axis=1)
    if not np.any(feasible):
        return None
    objs = np.einsum("ij,ij->i", c[col_sets[keep]], sols)
    return float(np.max(objs[feasible]))


def overlap_by_enumeration(
    amplitude_sets: list[np.ndarray],
    povm_sets: list[list[np.ndarray]],
    feas_tol: float = 1e-9,
) -> float:
    """Independent route to the max classical overlap.

    Builds its own deterministic-assignment set and constraint system from
    raw amplitudes and effect matrices, then enumerates basic feasible
    solutions of the lifted LP.
    """
    counts = [len(p) for p in povm_sets]
    lambdas = list(itertools.product(*(range(k) for k in counts)))
    nl = len(lambdas)
    ns = len(amplitude_sets)
    n_vars = nl * (2 * ns + 1)
    t_off = ns * nl
    s_off = t_off + nl

    rows: list[np.ndarray] = []
    rhs: list[float] = []
    for a_i, amps in enumerate(amplitude_sets):
        for m_i, effects in enumerate(povm_sets):
            for k in range(len(effects)):
                row = np.zeros(n_vars)
                for l_i, assignment in enumerate(lambdas):
                    if assignment[m_i] == k:
                        row[a_i * nl + l_i] = 1.0
                rows.append(row)
                rhs.append(float(np.real(np.vdot(amps, effects[k] @ amps))))
        for l_i in range(nl):
            row = np.zeros(n_vars)
            row[t_off + l_i] = 1.0
            row[a_i * nl + l_i] = -1.0
            row[s_off + a_i * nl + l_i] = 1.0
            rows.append(row)
            rhs.append(0.0)
    c = np.zeros(n_vars)
    c[t_off : t_off + nl] = 1.0
    value = enumerate_lp_max(np.array(rows), np.array(rhs), c, feas_tol)
    if value is None:
        raise AssertionError("oracle found no feasible basic solution")
    return value


def binomial_band(p: float, n: int, sigmas: float = 3.0) -> float:
    return sigmas * math.sqrt(p * (1.0 - p) / n)

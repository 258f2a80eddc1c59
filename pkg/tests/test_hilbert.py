"""Tests for the linear-algebra core."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ontic_nogo.hilbert import (
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
    basis_state,
    born,
    fidelity,
    inner,
    measure,
    orthonormal,
    project,
    projector,
    qudit_state,
    spin_measurement,
    spin_state,
    tensor,
    verification_measurement,
)

from oracles import binomial_band, spin_ket

SQ2 = 1.0 / math.sqrt(2.0)

directions = st.builds(
    Direction,
    polar=st.floats(0.0, math.pi, allow_nan=False),
    azimuth=st.floats(0.0, 2.0 * math.pi, exclude_max=True, allow_nan=False),
)


class TestLayout:
    def test_total_dim_is_product(self):
        layout = SubsystemLayout((("S", 2), ("F", 5), ("Sp", 2), ("Fp", 3)))
        assert layout.total_dim == 60
        assert layout.dims == (2, 5, 2, 3)

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            SubsystemLayout((("S", 2), ("S", 3)))

    def test_zero_dim_rejected(self):
        with pytest.raises(ValueError, match=">= 1"):
            SubsystemLayout((("S", 0),))

    def test_concat_collision(self):
        a = SubsystemLayout.single("S", 2)
        with pytest.raises(ValueError, match="collision"):
            a.concat(SubsystemLayout.single("S", 2))


class TestStateVector:
    def test_norm_enforced(self):
        layout = SubsystemLayout.single("S", 2)
        with pytest.raises(ValueError, match="norm"):
            StateVector(layout, np.array([1.0, 1.0]))

    def test_length_enforced(self):
        with pytest.raises(ValueError, match="length"):
            StateVector(SubsystemLayout.single("S", 2), np.array([1.0, 0.0, 0.0]))

    def test_amplitudes_frozen(self):
        s = qudit_state("S", 2, 0)
        with pytest.raises(ValueError):
            s.amplitudes[0] = 0.0


class TestTensor:
    def test_zero_zero(self):
        out = tensor(qudit_state("A", 2, 0), qudit_state("B", 2, 0))
        assert np.allclose(out.amplitudes, [1, 0, 0, 0])

    def test_xplus_zero(self):
        out = tensor(spin_state(DIR_X, True, "A"), qudit_state("B", 2, 0))
        assert np.allclose(out.amplitudes, [SQ2, 0, SQ2, 0])

    def test_four_factor_norm(self):
        state = tensor(
            tensor(spin_state(DIR_X, True, "S"), qudit_state("F", 5, 0)),
            tensor(spin_state(DIR_X, True, "Sp"), qudit_state("Fp", 3, 0)),
        )
        assert state.dim == 60
        assert abs(np.linalg.norm(state.amplitudes) - 1.0) < 1e-10


class TestSpinState:
    def test_z_up(self):
        assert np.allclose(spin_state(DIR_Z, True).amplitudes, [1, 0])

    def test_x_up(self):
        assert np.allclose(spin_state(DIR_X, True).amplitudes, [SQ2, SQ2])

    @pytest.mark.parametrize("theta", [0.0, 0.4, math.pi / 2, 2.2, math.pi])
    def test_overlap_law_in_xz_plane(self, theta):
        # |<+n|+x>|^2 = (1 + sin theta)/2 for azimuth 0
        n_up = spin_state(Direction(theta, 0.0), True)
        target = (1.0 + math.sin(theta)) / 2.0
        assert fidelity(n_up, spin_state(DIR_X, True)) == pytest.approx(target, abs=1e-12)

    @given(directions, st.booleans())
    @settings(max_examples=60, deadline=None)
    def test_matches_rotation_matrix_oracle(self, d, up):
        ours = spin_state(d, up).amplitudes
        oracle = spin_ket(d.polar, d.azimuth, up)
        assert abs(np.vdot(oracle, ours)) == pytest.approx(1.0, abs=1e-12)

    @given(directions)
    @settings(max_examples=60, deadline=None)
    def test_up_down_orthogonal(self, d):
        assert abs(inner(spin_state(d, True), spin_state(d, False))) < 1e-12


class TestDirection:
    def test_ranges(self):
        with pytest.raises(ValueError):
            Direction(-0.1, 0.0)
        with pytest.raises(ValueError):
            Direction(0.1, 2.0 * math.pi)

    def test_bloch_axes(self):
        assert np.allclose(DIR_Z.bloch(), [0, 0, 1])
        assert np.allclose(DIR_X.bloch(), [1, 0, 0], atol=1e-15)
        assert np.allclose(DIR_Y.bloch(), [0, 1, 0], atol=1e-15)
        assert DIR_Z.same_axis(Direction(0.0, 1.0))  # azimuth irrelevant at the pole


class TestUnitary:
    def test_identity_apply(self):
        layout = SubsystemLayout.single("S", 2)
        u = UnitaryOp(layout, np.eye(2))
        s = spin_state(DIR_X, True)
        assert np.allclose(apply(u, s).amplitudes, s.amplitudes)

    def test_non_unitary_rejected(self):
        with pytest.raises(ValueError, match="unitary"):
            UnitaryOp(SubsystemLayout.single("S", 2), np.array([[1, 0], [0, 2.0]]))

    def test_layout_mismatch(self):
        u = UnitaryOp(SubsystemLayout.single("A", 2), np.eye(2))
        with pytest.raises(ValueError, match="mismatch"):
            apply(u, qudit_state("B", 2, 0))

    @given(st.integers(0, 2**32 - 1), st.integers(2, 6))
    @settings(max_examples=40, deadline=None)
    def test_norm_preservation_random_unitaries(self, seed, dim):
        rng = np.random.default_rng(seed)
        raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        q, _ = np.linalg.qr(raw)
        layout = SubsystemLayout.single("S", dim)
        u = UnitaryOp(layout, q)
        amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        s = StateVector(layout, amps / np.linalg.norm(amps))
        out = apply(u, s)
        assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-10
        # U then U dagger returns the original state
        back = apply(UnitaryOp(layout, q.conj().T), out)
        assert fidelity(back, s) >= 1.0 - 1e-10


class TestPovm:
    def test_completeness_enforced(self):
        p = projector(qudit_state("S", 2, 0))
        with pytest.raises(ValueError, match="identity"):
            Povm((p, 0.5 * (np.eye(2) - p)))

    def test_psd_enforced(self):
        p = projector(qudit_state("S", 2, 0))
        with pytest.raises(ValueError, match="negative eigenvalue"):
            Povm((1.5 * p, np.eye(2) - 1.5 * p))

    def test_hermitian_enforced(self):
        e = np.array([[0.5, 0.5], [0.0, 0.5]])
        with pytest.raises(ValueError, match="Hermitian"):
            Povm((e, np.eye(2) - e))

    def test_projective_rejects_non_projector(self):
        e = 0.5 * np.eye(2)
        with pytest.raises(ValueError, match="projector"):
            ProjectiveMeasurement((e, np.eye(2) - e))

    @given(directions)
    @settings(max_examples=40, deadline=None)
    def test_spin_measurement_complete(self, d):
        m = spin_measurement(d)
        assert np.allclose(sum(m.effects), np.eye(2), atol=1e-10)


class TestBorn:
    def test_xplus_in_z_basis(self):
        probs = born(spin_state(DIR_X, True), spin_measurement(DIR_Z))
        assert np.allclose(probs, [0.5, 0.5], atol=1e-12)

    def test_zup_in_z_basis(self):
        assert np.allclose(born(spin_state(DIR_Z, True), spin_measurement(DIR_Z)), [1, 0])

    def test_verification_of_itself(self):
        phi = spin_state(Direction(1.0, 2.0), True)
        probs = born(phi, verification_measurement(phi))
        assert probs[0] == pytest.approx(1.0, abs=1e-10)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError, match="dim"):
            born(qudit_state("S", 3, 0), spin_measurement(DIR_Z))

    @given(directions, directions)
    @settings(max_examples=60, deadline=None)
    def test_distribution_properties(self, prep, meas):
        probs = born(spin_state(prep, True), spin_measurement(meas))
        assert abs(probs.sum() - 1.0) < 1e-10
        assert np.all(probs > -1e-10)
        assert np.all(probs < 1.0 + 1e-10)


class TestMeasure:
    def test_eigenstate_deterministic(self):
        rng = np.random.default_rng(5)
        s = spin_state(DIR_Z, True)
        for _ in range(16):
            outcome, post = measure(s, spin_measurement(DIR_Z), rng)
            assert outcome == 0
            assert fidelity(post, s) >= 1.0 - 1e-10

    def test_repeatability(self):
        rng = np.random.default_rng(9)
        m = spin_measurement(DIR_Z)
        outcome, post = measure(spin_state(DIR_X, True), m, rng)
        for _ in range(8):
            again, post = measure(post, m, rng)
            assert again == outcome

    def test_verification_non_demolition(self):
        rng = np.random.default_rng(3)
        phi = spin_state(Direction(0.7, 1.3), True)
        vm = verification_measurement(phi)
        outcome, post = measure(phi, vm, rng)
        assert outcome == 0
        assert fidelity(post, phi) >= 1.0 - 1e-10

    def test_seeded_replay(self):
        m = spin_measurement(DIR_Z)
        s = spin_state(DIR_X, True)
        seq1 = [measure(s, m, np.random.default_rng(1234 + i))[0] for i in range(64)]
        seq2 = [measure(s, m, np.random.default_rng(1234 + i))[0] for i in range(64)]
        assert seq1 == seq2

    def test_monte_carlo_frequency(self):
        # Derived check: |+x> measured in z lands up half the time.
        n = 100_000
        rng = np.random.default_rng(20240817)
        m = spin_measurement(DIR_Z)
        s = spin_state(DIR_X, True)
        ups = sum(1 for _ in range(n) if measure(s, m, rng)[0] == 0)
        assert abs(ups / n - 0.5) < binomial_band(0.5, n)

    def test_zero_probability_projection_raises(self):
        with pytest.raises(ValueError, match="zero probability"):
            project(spin_state(DIR_Z, True), spin_measurement(DIR_Z), 1)


class TestInner:
    def test_z_x_overlap(self):
        val = inner(spin_state(DIR_Z, True), spin_state(DIR_X, True))
        assert val == pytest.approx(SQ2, abs=1e-12)

    def test_self_inner(self):
        s = spin_state(Direction(2.0, 5.0), True)
        assert inner(s, s) == pytest.approx(1.0, abs=1e-12)

    def test_layout_mismatch(self):
        with pytest.raises(ValueError, match="different layouts"):
            inner(qudit_state("A", 2, 0), qudit_state("B", 2, 0))

    @given(directions, directions)
    @settings(max_examples=60, deadline=None)
    def test_bounded_by_one(self, a, b):
        val = abs(inner(spin_state(a, True), spin_state(b, True)))
        assert val <= 1.0 + 1e-10


def test_orthonormal_helper():
    assert orthonormal([qudit_state("S", 3, 0), qudit_state("S", 3, 1)])
    assert not orthonormal([spin_state(DIR_Z, True), spin_state(DIR_X, True)])


def test_basis_state_bounds():
    layout = SubsystemLayout.single("S", 3)
    assert np.allclose(basis_state(layout, 2).amplitudes, [0, 0, 1])

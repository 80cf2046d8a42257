"""Tests for the two-level algebra and the weak-value/commutator oracle."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from wvbench import qubit_core as qc


def test_pauli_algebra():
    assert_allclose(qc.PAULI_X @ qc.PAULI_X, np.eye(2), atol=1e-15)
    assert_allclose(qc.PAULI_Y @ qc.PAULI_Y, np.eye(2), atol=1e-15)
    assert_allclose(qc.PAULI_Z @ qc.PAULI_Z, np.eye(2), atol=1e-15)
    assert_allclose(qc.PAULI_X @ qc.PAULI_Y, 1j * qc.PAULI_Z, atol=1e-15)
    assert_allclose(qc.PAULI_Y @ qc.PAULI_Z, 1j * qc.PAULI_X, atol=1e-15)
    assert_allclose(qc.PAULI_Z @ qc.PAULI_X, 1j * qc.PAULI_Y, atol=1e-15)


def test_basis_states_are_eigenvectors():
    assert_allclose(qc.apply(qc.PAULI_X, qc.PLUS_X), qc.PLUS_X, atol=1e-15)
    assert_allclose(qc.apply(qc.PAULI_X, qc.MINUS_X), -qc.MINUS_X, atol=1e-15)
    assert_allclose(qc.apply(qc.PAULI_Y, qc.PLUS_Y), qc.PLUS_Y, atol=1e-15)
    assert_allclose(qc.apply(qc.PAULI_Y, qc.MINUS_Y), -qc.MINUS_Y, atol=1e-15)
    assert_allclose(qc.apply(qc.PAULI_Z, qc.KET_0), qc.KET_0, atol=1e-15)


def test_constants_are_immutable():
    with pytest.raises(ValueError):
        qc.PAULI_X[0, 0] = 7.0
    with pytest.raises(ValueError):
        qc.KET_0[0] = 0.0


def test_normalize():
    v = qc.normalize(np.array([3.0, 4.0j]))
    assert_allclose(np.linalg.norm(v), 1.0, rtol=1e-15)
    assert_allclose(v, [0.6, 0.8j], atol=1e-15)
    with pytest.raises(ValueError):
        qc.normalize(np.zeros(2))


def test_bloch_state_round_trip():
    rng = np.random.default_rng(7)
    for _ in range(100):
        theta = rng.uniform(0.0, np.pi)
        phi = rng.uniform(0.0, 2.0 * np.pi)
        state = qc.bloch_state(theta, phi)
        assert_allclose(np.linalg.norm(state), 1.0, rtol=1e-14)
        n = np.array(
            [
                np.sin(theta) * np.cos(phi),
                np.sin(theta) * np.sin(phi),
                np.cos(theta),
            ]
        )
        op = qc.axis_operator(*n)
        # +1 eigenvector of the matching axis operator
        assert_allclose(qc.apply(op, state), state, atol=1e-12)


def test_axis_operator_normalizes_and_validates():
    op = qc.axis_operator(2.0, 0.0, 0.0)
    assert_allclose(op, qc.PAULI_X, atol=1e-15)
    with pytest.raises(ValueError):
        qc.axis_operator(0.0, 0.0, 0.0)


def test_relative_phase_state():
    state = qc.relative_phase_state(0.0)
    assert_allclose(state, qc.PLUS_X, atol=1e-15)
    state = qc.relative_phase_state(np.pi / 2.0)
    assert_allclose(state, qc.PLUS_Y, atol=1e-15)
    chi = 1.2345
    state = qc.relative_phase_state(chi)
    assert_allclose(np.abs(state) ** 2, [0.5, 0.5], rtol=1e-14)
    assert_allclose(np.angle(state[1] / state[0]), chi, rtol=1e-14)


def test_projector_from_state():
    rng = np.random.default_rng(11)
    for _ in range(50):
        psi = qc.normalize(rng.normal(size=2) + 1j * rng.normal(size=2))
        proj = qc.projector_from_state(psi)
        assert_allclose(proj @ proj, proj, atol=1e-14)
        assert_allclose(proj, proj.conj().T, atol=1e-14)
        assert_allclose(np.trace(proj), 1.0, atol=1e-14)
        assert_allclose(qc.apply(proj, psi), psi, atol=1e-13)


def test_tensor_and_apply_shapes():
    joint = qc.tensor(qc.PLUS_X, qc.KET_0)
    assert joint.shape == (4,)
    assert_allclose(np.linalg.norm(joint), 1.0, rtol=1e-15)
    op = qc.tensor(qc.PAULI_Z, np.eye(2))
    assert_allclose(qc.apply(op, joint), qc.tensor(qc.apply(qc.PAULI_Z, qc.PLUS_X), qc.KET_0))


def test_state_validation_rejects_garbage():
    with pytest.raises(ValueError):
        qc.weak_value(np.array([1.0, 0.0, 0.0]), qc.PLUS_X, qc.PAULI_Z)
    with pytest.raises(ValueError):
        qc.weak_value(np.array([1.0, 1.0]), qc.PLUS_X, qc.PAULI_Z)  # not normalized
    with pytest.raises(ValueError):
        qc.weak_value(np.array([np.nan, 0.0]), qc.PLUS_X, qc.PAULI_Z)
    with pytest.raises(ValueError):
        qc.weak_value(qc.KET_0, qc.PLUS_X, np.eye(3))


# --- weak values -----------------------------------------------------------


def test_weak_value_matches_defining_ratio():
    rng = np.random.default_rng(23)
    for _ in range(200):
        pre = qc.normalize(rng.normal(size=2) + 1j * rng.normal(size=2))
        post = qc.normalize(rng.normal(size=2) + 1j * rng.normal(size=2))
        overlap = qc.inner(post, pre)
        if abs(overlap) < 1e-3:
            continue
        op = qc.axis_operator(*rng.normal(size=3))
        got = qc.weak_value(pre, post, op)
        expected = qc.inner(post, qc.apply(op, pre)) / overlap
        assert_allclose(got.value, expected, rtol=1e-12)
        assert_allclose(got.postselection_probability, abs(overlap) ** 2, rtol=1e-12)


@pytest.mark.parametrize(
    "chi, expected",
    [
        (0.0, 0.5 + 0.0j),
        (np.pi / 2.0, 0.5 - 0.5j),
        (2.0 * np.pi / 3.0, 0.5 - 0.8660254037844386j),
    ],
)
def test_path_weak_value_pinned(chi, expected):
    """Path projector between the phase-marked state and the +x post-selection."""
    result = qc.weak_value(
        qc.relative_phase_state(chi),
        qc.PLUS_X,
        qc.projector_from_state(qc.KET_0),
    )
    assert_allclose(result.value, expected, atol=1e-14)
    assert_allclose(result.postselection_probability, (1.0 + np.cos(chi)) / 2.0, atol=1e-14)


def test_path_weak_value_closed_form_on_grid():
    # 1/(1 + e^{i chi}); grid offset keeps us away from the orthogonal point
    chis = (np.arange(100) + 0.5) * 2.0 * np.pi / 100.0
    for chi in chis:
        result = qc.weak_value(
            qc.relative_phase_state(chi),
            qc.PLUS_X,
            qc.projector_from_state(qc.KET_0),
        )
        assert abs(result.value - 1.0 / (1.0 + np.exp(1j * chi))) < 1e-12
        assert result.value.real == pytest.approx(0.5, abs=1e-12)


def test_weak_value_rejects_orthogonal_postselection():
    with pytest.raises(qc.NearOrthogonalPostselection):
        qc.weak_value(qc.relative_phase_state(np.pi), qc.PLUS_X, qc.PAULI_Z)
    # tolerance is adjustable
    qc.weak_value(
        qc.relative_phase_state(np.pi - 1e-4), qc.PLUS_X, qc.PAULI_Z, eps=1e-12
    )


# --- commutator oracle -----------------------------------------------------


def test_commutator_direct_properties():
    rng = np.random.default_rng(31)
    for _ in range(50):
        op_a = qc.axis_operator(*rng.normal(size=3))
        op_b = qc.axis_operator(*rng.normal(size=3))
        psi = qc.normalize(rng.normal(size=2) + 1j * rng.normal(size=2))
        ab = qc.commutator_expectation_direct(op_a, op_b, psi)
        ba = qc.commutator_expectation_direct(op_b, op_a, psi)
        assert_allclose(ab, -ba, atol=1e-13)
        # Hermitian A, B -> expectation of [A, B] is purely imaginary
        assert abs(ab.real) < 1e-13


def test_commutator_via_weak_value_pinned():
    psi = qc.bloch_state(1.0, 2.0)
    proj_a = qc.projector_from_state(qc.bloch_state(0.7, 0.3))
    post_b = qc.bloch_state(2.0, 5.0)
    got = qc.commutator_via_weak_value(psi, proj_a, post_b)
    assert_allclose(got, -0.3507077493694905j, atol=1e-14)


def test_commutator_oracle_equivalence_sweep():
    """Weak-value route equals the direct matrix route for random draws."""
    rng = np.random.default_rng(12345)
    checked = 0
    while checked < 1000:
        psi = qc.normalize(rng.normal(size=2) + 1j * rng.normal(size=2))
        proj_a = qc.projector_from_state(
            qc.bloch_state(rng.uniform(0.0, np.pi), rng.uniform(0.0, 2.0 * np.pi))
        )
        post_b = qc.bloch_state(rng.uniform(0.0, np.pi), rng.uniform(0.0, 2.0 * np.pi))
        if abs(qc.inner(post_b, psi)) ** 2 < 1e-6:
            continue
        op_a = 2.0 * proj_a - np.eye(2)
        op_b = 2.0 * qc.projector_from_state(post_b) - np.eye(2)
        direct = qc.commutator_expectation_direct(op_a, op_b, psi)
        via = qc.commutator_via_weak_value(psi, proj_a, post_b)
        assert abs(via - direct) <= 1e-12
        checked += 1


def test_commutator_via_weak_value_rejects_non_projector():
    with pytest.raises(ValueError):
        qc.commutator_via_weak_value(qc.KET_0, qc.PAULI_X, qc.PLUS_X)
    with pytest.raises(ValueError):
        qc.commutator_via_weak_value(qc.KET_0, np.eye(2), qc.PLUS_X)


# --- scalar identity -------------------------------------------------------


def test_scalar_identity_sides_match_sine():
    chis = (np.arange(64) + 0.5) * 2.0 * np.pi / 64.0
    for chi in chis:
        lhs, rhs = qc.scalar_identity_sides(chi)
        assert lhs == pytest.approx(np.sin(chi), abs=1e-12)
        assert rhs == pytest.approx(np.sin(chi), abs=1e-12)


def test_scalar_identity_pinned():
    lhs, rhs = qc.scalar_identity_sides(0.9)
    assert_allclose(lhs, 0.783326909627483, atol=1e-14)
    assert_allclose(rhs, 0.7833269096274824, atol=1e-14)


def test_scalar_identity_rejects_orthogonal_point():
    with pytest.raises(qc.NearOrthogonalPostselection):
        qc.scalar_identity_sides(np.pi)

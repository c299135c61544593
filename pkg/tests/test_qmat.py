"""Kernel tests: operators, density validation, measurement, index maps."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qew.qmat import (
    BELL_LABELS,
    DensityMatrix,
    all_outcome_bits,
    apply_local_unitaries,
    as_density,
    basis_index,
    bell_basis,
    clock_op,
    computational_basis,
    expectation,
    index_digits,
    joint_measure_two_sites,
    obs,
    partial_trace,
    pauli,
    plusminus_basis,
    projective_measure,
    pure_density,
    realize_observable,
    shift_op,
    site_operator,
    tensor_product,
)


def bell_phi_plus() -> DensityMatrix:
    v = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0)
    return pure_density(v, (2, 2))


# ---------------------------------------------------------------------------
# local operators
# ---------------------------------------------------------------------------


def test_pauli_algebra():
    x, y, z = pauli("X"), pauli("Y"), pauli("Z")
    assert np.allclose(x @ x, np.eye(2))
    assert np.allclose(x @ y - y @ x, 2j * z)
    with pytest.raises(ValueError):
        pauli("Q")


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_shift_clock_weyl_relations(d):
    s, c = shift_op(d), clock_op(d)
    assert np.allclose(np.linalg.matrix_power(s, d), np.eye(d))
    assert np.allclose(np.linalg.matrix_power(c, d), np.eye(d))
    # clock . shift = w * shift . clock
    w = np.exp(2j * np.pi / d)
    assert np.allclose(c @ s, w * s @ c)


def test_qubit_limits_of_shift_clock():
    assert np.allclose(shift_op(2), pauli("X"))
    assert np.allclose(clock_op(2), pauli("Z"))


def test_site_operator_powers_wrap():
    assert np.allclose(site_operator("clock", 3, power=3), np.eye(3))
    assert np.allclose(site_operator("shift", 3, power=4), shift_op(3))
    with pytest.raises(ValueError):
        site_operator("X", 3)


def test_tensor_product_order():
    # left factor most significant: Z (x) I acts on the first site
    zi = tensor_product(pauli("Z"), np.eye(2))
    assert zi[3, 3] == -1  # |11> picks up the first site's -1
    assert zi[1, 1] == 1


# ---------------------------------------------------------------------------
# density construction
# ---------------------------------------------------------------------------


def test_as_density_validates():
    ok = as_density(np.diag([0.5, 0.5, 0.0, 0.0]), (2, 2))
    assert ok.dim == 4 and ok.n_sites == 2

    with pytest.raises(ValueError, match="[Hh]ermitian"):
        m = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
        m[0, 1] = 0.3
        as_density(m, (2, 2))
    with pytest.raises(ValueError, match="trace"):
        as_density(np.diag([0.5, 0.4, 0.0, 0.0]), (2, 2))
    with pytest.raises(ValueError):
        as_density(np.diag([1.5, -0.5, 0.0, 0.0]), (2, 2))
    with pytest.raises(ValueError):
        as_density(np.eye(4) / 4.0, (2, 3))


def test_pure_density_norm_check():
    with pytest.raises(ValueError, match="norm"):
        pure_density(np.array([1.0, 1.0]), (2,))


def test_flags_carried():
    r = as_density(np.eye(2) / 2, (2,), flags=("boundary",))
    assert "boundary" in r.flags
    r2 = r.with_flags("extra")
    assert set(r2.flags) == {"boundary", "extra"}


# ---------------------------------------------------------------------------
# observables and expectations
# ---------------------------------------------------------------------------


def test_obs_labels_and_duplicates():
    o = obs((1, "Z"), (2, "X"))
    assert o.label() == "Z@1 X@2"
    with pytest.raises(ValueError):
        obs((1, "Z"), (1, "X"))
    with pytest.raises(ValueError):
        obs((0, "Z"))


def test_expectations_on_bell_pair():
    rho = bell_phi_plus()
    assert expectation(rho, obs((1, "Z"), (2, "Z"))) == pytest.approx(1.0)
    assert expectation(rho, obs((1, "X"), (2, "X"))) == pytest.approx(1.0)
    assert expectation(rho, obs((1, "Z"), (2, "X"))) == pytest.approx(0.0)
    assert expectation(rho, obs((1, "Y"), (2, "Y"))) == pytest.approx(-1.0)


def test_complex_expectation_of_nonhermitian_operator():
    """clock (x) clock on a 1-qudit-pair superposition has a complex value."""
    d = 3
    v = np.zeros(9, dtype=complex)
    v[basis_index((0, 0), (3, 3))] = np.sqrt(0.5)
    v[basis_index((1, 2), (3, 3))] = np.sqrt(0.5)
    rho = pure_density(v, (3, 3))
    val = expectation(rho, obs((1, "clock"), (2, "clock", 2)))
    # populations contribute w^0 * 1/2 + w^(1+4) * 1/2 = (1 + w^2)/2
    w = np.exp(2j * np.pi / d)
    assert val == pytest.approx((1 + w**2) / 2)


def test_realize_observable_range_error():
    with pytest.raises(ValueError, match="sites"):
        realize_observable(obs((3, "Z")), (2, 2))


def test_apply_local_unitaries_flip():
    rho = pure_density(np.array([1.0, 0.0, 0.0, 0.0]), (2, 2))
    out = apply_local_unitaries(rho, [(1, pauli("X"))])
    assert out.mat[2, 2] == pytest.approx(1.0)  # |10><10|
    with pytest.raises(ValueError, match="unitary"):
        apply_local_unitaries(rho, [(1, np.array([[1.0, 0.0], [0.0, 2.0]]))])


# ---------------------------------------------------------------------------
# measurement
# ---------------------------------------------------------------------------


def test_projective_measure_plusminus_on_product():
    # |+>|0>: measuring site 1 in +/- gives the + branch with certainty
    v = np.kron(np.array([1.0, 1.0]) / np.sqrt(2), np.array([1.0, 0.0]))
    rho = pure_density(v, (2, 2))
    branches = projective_measure(rho, 1, plusminus_basis())
    assert branches[0].probability == pytest.approx(1.0)
    assert branches[1].flagged_zero and branches[1].state is None
    assert branches[0].state.mat[0, 0] == pytest.approx(1.0)


def test_projective_measure_probabilities_sum():
    rho = bell_phi_plus()
    branches = projective_measure(rho, 2, plusminus_basis())
    assert sum(b.probability for b in branches) == pytest.approx(1.0)
    # each branch of a Bell pair is an equal-weight pure state on the rest
    for b in branches:
        assert b.probability == pytest.approx(0.5)
        assert np.isclose(np.trace(b.state.mat @ b.state.mat).real, 1.0)


def test_joint_measure_bell_identifies_bell_state():
    # Phi+ (x) |0>: measuring sites (1, 2) jointly in the Bell basis is certain
    v = np.kron(np.array([1, 0, 0, 1]) / np.sqrt(2), np.array([1.0, 0.0]))
    rho = pure_density(v, (2, 2, 2))
    branches = joint_measure_two_sites(rho, (1, 2), bell_basis())
    assert [b.outcome for b in branches] == [0, 1, 2, 3]
    assert branches[0].probability == pytest.approx(1.0)
    assert branches[0].state.mat[0, 0] == pytest.approx(1.0)
    assert all(b.flagged_zero for b in branches[1:])
    assert len(BELL_LABELS) == 4


def test_joint_measure_splits_across_entangled_cut():
    # Phi+ on (1, 2), |+> on 3; measuring (2, 3) mixes the four outcomes
    v = np.kron(np.array([1, 0, 0, 1]) / np.sqrt(2), np.array([1.0, 1.0]) / np.sqrt(2))
    rho = pure_density(v, (2, 2, 2))
    branches = joint_measure_two_sites(rho, (2, 3), bell_basis())
    assert sum(b.probability for b in branches) == pytest.approx(1.0)
    for b in branches:
        assert b.probability == pytest.approx(0.25)
        assert b.state.sites == (2,)


def test_joint_measure_needs_three_sites():
    with pytest.raises(ValueError):
        joint_measure_two_sites(bell_phi_plus(), (1, 2), bell_basis())


def test_measure_basis_validation():
    rho = bell_phi_plus()
    with pytest.raises(ValueError, match="orthonormal"):
        projective_measure(rho, 1, np.array([[1.0, 0.0], [1.0, 0.0]]))


# ---------------------------------------------------------------------------
# partial trace
# ---------------------------------------------------------------------------


def test_partial_trace_bell_is_maximally_mixed():
    reduced = partial_trace(bell_phi_plus(), keep=(1,))
    assert np.allclose(reduced.mat, np.eye(2) / 2)


def test_partial_trace_product_factors():
    a = np.array([1.0, 0.0])
    b = np.array([0.6, 0.8])
    rho = pure_density(np.kron(a, b), (2, 2))
    kept = partial_trace(rho, keep=(2,))
    assert np.allclose(kept.mat, np.outer(b, b))


def test_partial_trace_keeps_order_and_validates():
    rho = pure_density(np.kron([1.0, 0.0, 0.0], [0.0, 1.0]), (3, 2))
    kept = partial_trace(rho, keep=(1,))
    assert kept.sites == (3,)
    with pytest.raises(ValueError):
        partial_trace(rho, keep=())


# ---------------------------------------------------------------------------
# index maps
# ---------------------------------------------------------------------------


@given(st.lists(st.integers(min_value=2, max_value=5), min_size=1, max_size=4), st.data())
def test_index_digit_roundtrip(sites, data):
    digits = tuple(data.draw(st.integers(0, d - 1)) for d in sites)
    idx = basis_index(digits, sites)
    assert index_digits(idx, sites) == digits


def test_basis_index_site_one_most_significant():
    assert basis_index((1, 0), (2, 2)) == 2
    assert basis_index((0, 1), (2, 2)) == 1
    assert basis_index((1, 2), (3, 3)) == 5


def test_bases_are_orthonormal():
    for b in (computational_basis(3), plusminus_basis(), bell_basis()):
        assert np.allclose(b @ b.conj().T, np.eye(b.shape[0]))


def test_all_outcome_bits_order():
    got = list(all_outcome_bits(2))
    assert got == [(0, 0), (0, 1), (1, 0), (1, 1)]

import numpy as np
import pytest
import scipy.linalg
from numpy.testing import assert_allclose

from diraclab import (
    GeometryError,
    Region,
    SpinorLattice,
    ZeroModeError,
    build_model,
    lapse_profile,
    positive_projector,
    thermal_operator,
)

from conftest import dispersion_energies, make_abstract_model

S1 = np.array([[0.0, 1.0], [1.0, 0.0]])
S3 = np.diag([1.0, -1.0])


def test_spectrum_symmetric_about_zero():
    model = build_model(SpinorLattice(n_sites=4), mass=0.0)
    lam = model.eigenvalues
    assert_allclose(lam, -lam[::-1], atol=1e-10)


def test_dispersion_matches_closed_form():
    # oracle: exact diagonalization of the translation-invariant chain
    for spacing in (1.0, 0.7):
        model = build_model(SpinorLattice(n_sites=64, spacing=spacing), mass=1.0)
        expected = dispersion_energies(64, spacing, 1.0)
        assert_allclose(np.sort(model.eigenvalues), expected, atol=1e-10)


def test_two_site_hand_computation():
    # on 2 periodic sites the central difference cancels, so h = s1 (x) 1
    model = build_model(SpinorLattice(n_sites=2), mass=1.0)
    assert_allclose(model.h, np.kron(S1, np.eye(2)), atol=1e-14)
    assert_allclose(np.sort(model.eigenvalues), [-1.0, -1.0, 1.0, 1.0], atol=1e-12)
    ground = positive_projector(model)
    assert_allclose(ground.p_op, 0.5 * np.kron(np.eye(2) + S1, np.eye(2)), atol=1e-12)


@pytest.mark.parametrize("lapse", [1.0, "bump"])
def test_model_invariants(lapse):
    if isinstance(lapse, str):
        lapse = lapse_profile(lapse, 12, amplitude=0.3)
    model = build_model(SpinorLattice(n_sites=12, spacing=0.8, lapse=lapse), mass=0.7)
    h = model.h
    scale = np.linalg.norm(h, 2)
    assert np.linalg.norm(h - h.conj().T, 2) <= 1e-12 * scale
    assert np.linalg.norm(model.conj.conjugate_operator(h) + h, 2) <= 1e-12 * scale
    lam = model.eigenvalues
    assert_allclose(lam, -lam[::-1], atol=1e-10)
    assert model.conj.involution_defect() <= 1e-12
    # antiunitarity on a basis: (C e_i | C e_j) = (e_j | e_i)
    eye = np.eye(model.dim)
    for i in range(0, model.dim, 5):
        for j in range(0, model.dim, 7):
            lhs = np.vdot(model.conj.apply(eye[i]), model.conj.apply(eye[j]))
            assert abs(lhs - np.vdot(eye[j], eye[i])) < 1e-12


def test_gap_report_against_m0():
    model = build_model(SpinorLattice(n_sites=32, lapse=lapse_profile("bump", 32)), mass=1.0)
    # reported, not asserted: the continuum bound gap^2 >= m0^2 may shift on the lattice
    assert model.spectral_gap > 0
    assert model.m0 == pytest.approx(model.lattice.v0 * model.mass)


def test_positive_projector_properties(flat8, ground8):
    p = ground8.p_op
    assert_allclose(p @ p, p, atol=1e-12)
    d = flat8.dim
    assert_allclose(flat8.conj.conjugate_operator(p), np.eye(d) - p, atol=1e-12)
    assert np.linalg.matrix_rank(p) == d // 2


def test_projector_of_diagonal_model():
    h = np.kron(S3, np.eye(2))  # diag(+1, +1, -1, -1)
    model = make_abstract_model(h, np.kron(S1, np.eye(2)))
    state = positive_projector(model)
    assert_allclose(state.p_op, np.diag([1.0, 1.0, 0.0, 0.0]), atol=1e-12)


def test_thermal_operator_rejects_nonpositive_beta(flat8):
    for beta in (0.0, -1.0):
        with pytest.raises(ValueError):
            thermal_operator(flat8, beta)


def test_thermal_operator_diagonal_example():
    h = np.kron(S3, np.eye(2))
    model = make_abstract_model(h, np.kron(S1, np.eye(2)))
    out = thermal_operator(model, np.log(2.0))
    assert_allclose(out, np.diag([0.5, 0.5, 2.0, 2.0]), atol=1e-12)


def test_thermal_operator_against_expm_oracle(rng):
    # oracle: scipy's scaling-and-squaring matrix exponential
    x = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = 0.5 * (x + x.conj().T)
    theta = np.eye(8)  # conj is irrelevant for exp(-beta h)
    model = make_abstract_model(h, theta, n_sites=4)
    beta = 0.7
    assert_allclose(thermal_operator(model, beta), scipy.linalg.expm(-beta * h), atol=1e-10)


def test_damped_projector_norm(flat8, ground8):
    beta = 1.3
    damped = thermal_operator(flat8, beta) @ ground8.p_op
    expected = np.exp(-beta * flat8.min_positive_eigenvalue)
    assert np.linalg.norm(damped, 2) == pytest.approx(expected, rel=1e-12)


def test_zero_mode_policy():
    model = build_model(SpinorLattice(n_sites=4), mass=0.0)
    with pytest.raises(ZeroModeError):
        positive_projector(model)
    state = positive_projector(model, zero_mode_policy="positive")
    state.validate()
    assert not state.gapped
    assert_allclose(state.p_op @ state.p_op, state.p_op, atol=1e-10)
    again = positive_projector(model, zero_mode_policy="positive")
    assert_allclose(state.p_op, again.p_op, atol=0)  # deterministic rule


def test_geometry_errors():
    with pytest.raises(GeometryError):
        SpinorLattice(n_sites=1)
    with pytest.raises(GeometryError):
        SpinorLattice(n_sites=4, spacing=0.0)
    with pytest.raises(GeometryError):
        SpinorLattice(n_sites=4, lapse=[1.0, 1.0, 0.0, 1.0])
    with pytest.raises(GeometryError):
        build_model(SpinorLattice(n_sites=4), mass=-0.5)


def test_region_projector_properties(flat8):
    lattice = flat8.lattice
    region = Region(lattice, (1, 2, 5))
    e = region.e_c
    assert_allclose(e @ e, e, atol=0)
    assert_allclose(e, e.conj().T, atol=0)
    theta = flat8.conj.theta
    assert_allclose(e @ theta, theta @ e, atol=0)
    comp = region.complement()
    assert_allclose(comp.e_c, np.eye(flat8.dim) - e, atol=0)
    assert Region.full(lattice).fraction == 1.0
    assert Region.empty(lattice).is_empty


def test_region_chi_validation_and_smoothing(flat8):
    lattice = flat8.lattice
    with pytest.raises(GeometryError):
        Region(lattice, (0, 1), chi=np.ones(3))
    with pytest.raises(GeometryError):
        Region(lattice, (0, 1), chi=0.5 * np.ones(lattice.n_sites))
    smooth = Region.half(lattice).with_smooth_chi(width=2)
    assert np.all(smooth.chi >= 0) and np.all(smooth.chi <= 1)
    assert np.all(smooth.chi[list(smooth.sites)] == 1.0)
    assert smooth.chi[lattice.n_sites - 1] > 0  # ramp extends outside the core

import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose

from diraclab import (
    AlgebraElement,
    FitError,
    LocalizedThermalOperator,
    Region,
    SpinorLattice,
    StateMismatchError,
    SupportError,
    build_fock,
    build_model,
    build_s,
    coefficient_inequality_check,
    det_bound,
    hamiltonian,
    nuclearity_scan,
    positive_projector,
    range_density_check,
    rescaled_model,
    rescaling_check,
    resolvent_trace_scan,
    schatten_norm,
    thermal_state,
)

from conftest import dispersion_energies


def test_schatten_trivial_values(rng):
    assert schatten_norm(np.eye(5), 1.0) == pytest.approx(5.0)
    assert schatten_norm(np.diag([3.0, 4.0]), 2.0) == pytest.approx(5.0)
    with pytest.raises(ValueError):
        schatten_norm(np.eye(2), 0.0)
    with pytest.raises(ValueError):
        schatten_norm(np.eye(2), -1.0)


def test_schatten_against_gram_oracle(rng):
    # oracle: singular values recovered from the Gram spectrum
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    sigma = np.sqrt(np.clip(np.linalg.eigvalsh(a.conj().T @ a), 0.0, None))
    assert schatten_norm(a, 1.0) == pytest.approx(sigma.sum(), abs=1e-10)
    assert schatten_norm(a, 0.5) == pytest.approx(np.sum(np.sqrt(sigma)) ** 2, abs=1e-8)


def test_build_s_empty_region(flat8, ground8):
    op = build_s(flat8, ground8, Region.empty(flat8.lattice), beta=1.0)
    assert np.all(op.s_matrix == 0)
    assert op.trace_norm == 0.0
    assert op.t1 == 0.0


def test_build_s_full_region_closed_form(flat8, ground8):
    # oracle: independent dispersion sum, ||S||_1 = 2 sum_{lambda > 0} exp(-beta lambda)
    beta = 0.8
    op = build_s(flat8, ground8, Region.full(flat8.lattice), beta)
    energies = dispersion_energies(8, 1.0, 1.0)
    expected = 2.0 * np.exp(-beta * energies[energies > 0]).sum()
    assert op.trace_norm == pytest.approx(expected, rel=1e-12)


def test_build_s_requires_ground_state(flat8, half8):
    with pytest.raises(StateMismatchError):
        build_s(flat8, thermal_state(flat8, 2.0), half8, beta=1.0)
    with pytest.raises(ValueError):
        build_s(flat8, positive_projector(flat8), half8, beta=0.0)


def test_operator_norm_bound_and_polar(flat8, ground8, half8):
    for beta in (0.5, 1.0, 2.0):
        op = build_s(flat8, ground8, half8, beta)
        bound = 2.0 * np.exp(-beta * flat8.min_positive_eigenvalue)
        assert op.t1 <= bound * (1 + 1e-12)
        # polar consistency S = V T
        recon = op.v_isometry @ op.t_matrix
        assert np.linalg.norm(recon - op.s_matrix, 2) <= 1e-10 * max(op.t1, 1e-30)
        support = op.v_isometry.conj().T @ op.v_isometry
        t_rank = np.sum(op.t_singvals > 1e-13 * op.t1)
        assert np.trace(support).real == pytest.approx(t_rank, abs=1e-8)
        assert np.linalg.eigvalsh(op.t_matrix).min() > -1e-12


def test_t_lives_on_positive_subspace(flat8, ground8, half8):
    op = build_s(flat8, ground8, half8, beta=1.0)
    p = ground8.p_op
    assert np.linalg.norm(p @ op.t_matrix - op.t_matrix, 2) < 1e-12
    assert np.linalg.norm(op.t_matrix @ p - op.t_matrix, 2) < 1e-12
    # mode eigenpairs reproduce T on that subspace
    recon = (op.mode_vectors * op.mode_t) @ op.mode_vectors.conj().T
    assert np.linalg.norm(recon - op.t_matrix, 2) < 1e-10


def _toy_op(mode_t):
    # minimal operator carrying only the polar data used by det_bound
    mode_t = np.asarray(mode_t, dtype=float)
    return LocalizedThermalOperator(
        model=None, state=None, region=None, beta=1.0,
        s_matrix=np.zeros((2, 2)), t_singvals=np.sort(mode_t)[::-1],
        t_matrix=np.diag(mode_t), v_isometry=np.eye(2),
        mode_t=mode_t, mode_vectors=np.eye(2)[:, : len(mode_t)],
    )


def test_det_bound_trivial_cases():
    assert det_bound(_toy_op([0.0, 0.0]), 1.0).value == pytest.approx(1.0)
    t = 0.37
    for p in (0.5, 1.0, 2.0):
        got = det_bound(_toy_op([t]), p).value
        assert got == pytest.approx((1 + t**p) ** (1 / p), rel=1e-12)
    with pytest.raises(ValueError):
        det_bound(_toy_op([t]), 0.0)


def test_det_bound_wedge_expansion(rng):
    # oracle: brute-force sum of elementary symmetric polynomials over subsets
    t = rng.uniform(0.1, 2.0, size=3)
    for p in (0.5, 1.0, 2.0):
        brute = sum(
            np.prod((t**p)[list(subset)])
            for k in range(len(t) + 1)
            for subset in itertools.combinations(range(len(t)), k)
        )
        bound = det_bound(_toy_op(t), p)
        assert bound.wedge_sum == pytest.approx(brute, rel=1e-12)
        assert bound.value**p == pytest.approx(brute, rel=1e-12)


def test_coefficient_identity_element(flat8, ground8, half8):
    rep = build_fock(ground8)
    h_fock = hamiltonian(rep, flat8)
    op = build_s(flat8, ground8, half8, beta=1.0)
    report = coefficient_inequality_check(rep, h_fock, op, AlgebraElement.identity(), k_max=3)
    # identity: lhs vanishes for k >= 1 and equals 1 = ||A|| at k = 0
    assert report.max_violation <= 1e-12
    assert report.a_norm == pytest.approx(1.0)


def test_coefficient_support_error(flat8, ground8, half8):
    rep = build_fock(ground8)
    h_fock = hamiltonian(rep, flat8)
    op = build_s(flat8, ground8, half8, beta=1.0)
    outside = np.ones(flat8.dim, dtype=complex)
    with pytest.raises(SupportError):
        coefficient_inequality_check(rep, h_fock, op, AlgebraElement.word([outside]))


def test_coefficient_random_words_hold(rng):
    model = build_model(SpinorLattice(n_sites=6), mass=1.0)
    ground = positive_projector(model)
    rep = build_fock(ground)
    h_fock = hamiltonian(rep, model)
    region = Region.half(model.lattice)
    sel = region.e_c_diag
    op = build_s(model, ground, region, beta=1.0)
    for _ in range(10):
        ks = [(rng.normal(size=model.dim) + 1j * rng.normal(size=model.dim)) * sel
              for _ in range(int(rng.integers(1, 4)))]
        element = AlgebraElement.word(ks)
        report = coefficient_inequality_check(rep, h_fock, op, element)
        assert report.max_violation <= 1e-9


def test_scan_full_region_closed_form_and_invariants():
    model = build_model(SpinorLattice(n_sites=16), mass=1.0)
    region = Region.full(model.lattice)
    betas = np.geomspace(0.6, 3.0, 9)
    report = nuclearity_scan(model, region, betas)
    energies = dispersion_energies(16, 1.0, 1.0)
    pos = energies[energies > 0]
    expected = np.array([2.0 * np.exp(-b * pos).sum() for b in betas])
    assert_allclose(report.s_trace_norms, expected, rtol=1e-10)
    assert report.violations == []
    assert np.all(np.diff(report.s_trace_norms) < 0)
    for p in report.p_values:
        assert np.all(report.det_bounds[p] >= 1.0)
    assert np.all(report.nu_bounds >= report.det_bounds[1.0] - 1e-12)


def test_scan_beta_doubling_asymptote():
    model = build_model(SpinorLattice(n_sites=8), mass=1.0)
    ground = positive_projector(model)
    region = Region.full(model.lattice)
    gap = model.min_positive_eigenvalue
    beta = 20.0
    t1 = build_s(model, ground, region, beta).trace_norm
    t2 = build_s(model, ground, region, 2 * beta).trace_norm
    assert t2 / t1 == pytest.approx(np.exp(-beta * gap), rel=0.05)


def test_scan_grid_validation(flat8, half8):
    with pytest.raises(ValueError):
        nuclearity_scan(flat8, half8, np.linspace(0.5, 2.0, 5))
    with pytest.raises(ValueError):
        nuclearity_scan(flat8, half8, -np.linspace(0.5, 2.0, 8))


def test_scan_empty_window_raises(flat8, half8):
    betas = np.geomspace(0.001, 0.01, 8)  # t1 stays near 2: no fit window
    with pytest.raises(FitError):
        nuclearity_scan(flat8, half8, betas)


def test_scan_empty_region_degenerate(flat8):
    betas = np.geomspace(0.5, 2.0, 8)
    report = nuclearity_scan(flat8, Region.empty(flat8.lattice), betas)
    assert report.degenerate
    assert np.all(report.s_trace_norms == 0)
    assert np.isnan(report.fitted_beta0)


def test_scan_mode_t_monotone(flat8, half8):
    betas = np.geomspace(0.5, 3.0, 10)
    report = nuclearity_scan(flat8, half8, betas)
    assert np.all(np.diff(report.mode_t, axis=0) <= 1e-12)


def test_parallel_scan_matches_serial(flat8, half8):
    betas = np.geomspace(0.5, 3.0, 8)
    serial = nuclearity_scan(flat8, half8, betas)
    parallel = nuclearity_scan(flat8, half8, betas, workers=4)
    assert_allclose(serial.s_trace_norms, parallel.s_trace_norms, atol=0)


def test_rescaling_identity_lambda_one(flat8, half8):
    report = rescaling_check(flat8, half8, beta=1.5, lam=1.0)
    assert report.max_singval_deviation < 1e-12


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_rescaling_identity_exact(lam):
    model = build_model(SpinorLattice(n_sites=12, spacing=0.5), mass=0.5)
    region = Region.half(model.lattice)
    report = rescaling_check(model, region, beta=2.0, lam=lam)
    assert report.max_singval_deviation <= 1e-10
    # trace norms agree between the two constructions
    assert report.trace_norm_rescaled == pytest.approx(report.trace_norm_reference, rel=1e-10)
    prime = rescaled_model(model, lam)
    assert prime.lattice.spacing == pytest.approx(0.5 * lam)


def test_resolvent_zero_profile(flat8):
    region = Region(flat8.lattice, (), chi=np.zeros(flat8.lattice.n_sites))
    betas = np.geomspace(5.0, 20.0, 6)
    report = resolvent_trace_scan(flat8, region, betas)
    assert np.all(report.norms == 0)


def test_resolvent_monotone_decreasing(flat8):
    region = Region.half(flat8.lattice).with_smooth_chi(width=2)
    betas = np.geomspace(5.0, 40.0, 8)
    report = resolvent_trace_scan(flat8, region, betas)
    assert np.all(np.diff(report.norms) < 0)
    for n in (1, 2):
        assert np.all(np.isfinite(report.hs_norms[n]))


def test_resolvent_requires_chi_and_window(flat8, half8):
    with pytest.raises(Exception):
        resolvent_trace_scan(flat8, half8, np.geomspace(5.0, 20.0, 6))
    region = Region.half(flat8.lattice).with_smooth_chi(width=2)
    with pytest.raises(FitError):
        resolvent_trace_scan(flat8, region, np.geomspace(0.01, 0.1, 6))


def test_range_density(flat8, ground8, half8):
    full = build_s(flat8, ground8, Region.full(flat8.lattice), 1.0)
    report = range_density_check(full)
    assert report.full_rank and report.rank == report.dim_h
    half = build_s(flat8, ground8, half8, 1.0)
    report = range_density_check(half)
    assert report.full_rank
    assert 0 < report.sigma_min < 1
    empty = build_s(flat8, ground8, Region.empty(flat8.lattice), 1.0)
    assert range_density_check(empty).rank == 0

"""Seeded verification suites behind the ``verify`` CLI command.

Each suite runs a scaled-down version of the package's defining identities
and returns its worst-case margin; margins are signed so that negative (or
below-tolerance) values mean failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .config import RunConfig
from .errors import DiracLabError
from .fock import AlgebraElement, build_fock, field_operator, hamiltonian, vacuum_n_point
from .model import ChargeConjugation, Region, SpinorLattice, build_model, positive_projector
from .nuclearity import (
    build_s,
    coefficient_inequality_check,
    rescaling_check,
    resolvent_trace_scan,
)
from .quasiequiv import factoriality_check, ps_inequality_test
from .states import n_point, thermal_state

CAR_TOL = 1e-12
FIELD_TOL = 1e-10
WICK_TOL = 1e-9
COEFF_TOL = 1e-9
PS_TOL = -1e-10


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    worst_margin: float
    detail: str


def _random_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    return rng.normal(size=dim) + 1j * rng.normal(size=dim)


def _corrupted(conj: ChargeConjugation) -> ChargeConjugation:
    theta = np.array(conj.theta)
    theta[0, 0] = -theta[0, 0]
    return ChargeConjugation(theta)


def car_suite(rng: np.random.Generator, corrupt_theta: bool = False,
              n_sites: int = 5, n_pairs: int = 50) -> SuiteResult:
    """Anticommutation relations of the mode operators and the represented fields."""
    model = build_model(SpinorLattice(n_sites=n_sites), mass=1.0)
    ground = positive_projector(model)
    rep = build_fock(ground)
    dim = rep.dim_fock
    eye = np.eye(dim)

    worst = 0.0
    for i in range(rep.n_modes):
        for j in range(rep.n_modes):
            ai, aj = rep.annihilator(i), rep.annihilator(j)
            mixed = (ai @ aj.conj().T + aj.conj().T @ ai).toarray()
            worst = max(worst, np.abs(mixed - (i == j) * eye).max())
            same = (ai @ aj + aj @ ai).toarray()
            worst = max(worst, np.abs(same).max())
    if worst > CAR_TOL:
        return SuiteResult("car", False, worst,
                           "identity {a_i, a_j*} = delta_ij 1 failed")

    conj = _corrupted(model.conj) if corrupt_theta else model.conj
    worst_field = 0.0
    for _ in range(n_pairs):
        k1 = _random_vector(rng, model.dim)
        k2 = _random_vector(rng, model.dim)
        psi1 = field_operator(rep, k1)
        psi2 = field_operator(rep, k2)
        anti = (psi1 @ psi2 + psi2 @ psi1).toarray()
        expected = complex(np.vdot(conj.apply(k1), k2))
        worst_field = max(worst_field, np.abs(anti - expected * eye).max())
    if worst_field > FIELD_TOL:
        return SuiteResult("car", False, worst_field,
                           "identity {psi(k1), psi(k2)} = (Ck1|k2) 1 failed")
    return SuiteResult("car", True, max(worst, worst_field),
                       f"max deviation {max(worst, worst_field):.3e}")


def wick_suite(rng: np.random.Generator, n_sites: int = 4, n_tuples: int = 25) -> SuiteResult:
    """Pair-partition n-point values against brute-force vacuum expectations."""
    model = build_model(SpinorLattice(n_sites=n_sites), mass=1.0)
    ground = positive_projector(model)
    rep = build_fock(ground)
    worst = 0.0
    for _ in range(n_tuples):
        for n in (2, 4, 6):
            ks = [_random_vector(rng, model.dim) for _ in range(n)]
            lhs = n_point(ground, ks)
            rhs = vacuum_n_point(rep, ks)
            worst = max(worst, abs(lhs - rhs))
    passed = worst <= WICK_TOL
    return SuiteResult("wick", passed, worst, f"max deviation {worst:.3e}")


def coeff_suite(rng: np.random.Generator, n_sites: int = 8, n_words: int = 10,
                betas=(0.5, 1.0, 2.0), k_max: int = 5) -> SuiteResult:
    """Coefficient inequality on random localized words."""
    model = build_model(SpinorLattice(n_sites=n_sites), mass=1.0)
    ground = positive_projector(model)
    rep = build_fock(ground)
    h_fock = hamiltonian(rep, model)
    region = Region.half(model.lattice)
    sel = region.e_c_diag
    worst = -np.inf
    for beta in betas:
        op = build_s(model, ground, region, beta)
        for _ in range(n_words):
            length = int(rng.integers(1, 4))
            ks = [_random_vector(rng, model.dim) * sel for _ in range(length)]
            element = AlgebraElement.word(ks, coeff=1.0, support=region)
            report = coefficient_inequality_check(rep, h_fock, op, element, k_max=k_max)
            worst = max(worst, report.max_violation)
    passed = worst <= COEFF_TOL
    return SuiteResult("coeff", passed, worst, f"max (lhs - rhs) {worst:.3e}")


def ps_suite(rng: np.random.Generator, trials: int = 200, max_dim: int = 20) -> SuiteResult:
    """Powers-Stormer slack on random positive pairs."""
    worst = np.inf
    for _ in range(trials):
        dim = int(rng.integers(2, max_dim + 1))
        x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        y = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        a = x @ x.conj().T / dim
        b = y @ y.conj().T / dim
        worst = min(worst, ps_inequality_test(a, b))
    passed = worst >= PS_TOL
    return SuiteResult("ps", passed, worst, f"min slack {worst:.3e}")


def factor_suite(rng: np.random.Generator, instances: int = 5) -> SuiteResult:
    """Trivial intersection of the localized real subspace with the twisted complement."""
    worst_angle = np.inf
    for _ in range(instances):
        n = int(rng.integers(4, 9))
        mass = float(rng.uniform(0.5, 1.5))
        model = build_model(SpinorLattice(n_sites=n), mass=mass)
        state = thermal_state(model, beta=float(rng.uniform(0.5, 3.0)))
        size = int(rng.integers(1, n))
        region = Region.from_range(model.lattice, 0, size)
        report = factoriality_check(state, region)
        worst_angle = min(worst_angle, report.min_angle)
        if not report.trivial_intersection:
            return SuiteResult("factor", False, report.min_angle,
                               f"intersection dimension {report.intersection_dim}")
    return SuiteResult("factor", True, worst_angle, f"min principal angle {worst_angle:.3e}")


def resolvent_suite(n_sites: int = 256) -> SuiteResult:
    """Log-log slope of the smoothed localized resolvent trace norm.

    Needs an infrared-dense lattice: the fit window starts at the inverse of
    the largest eigenvalue, and several momentum modes must sit inside the
    resolvent knee there, which fails below roughly 128 sites.
    """
    model = build_model(SpinorLattice(n_sites=n_sites, spacing=0.125), mass=0.05)
    region = Region.half(model.lattice).with_smooth_chi(width=8)
    betas = np.geomspace(1.5, 6.0, 12)
    report = resolvent_trace_scan(model, region, betas, s_power=1)
    passed = -1.15 <= report.slope <= -0.85
    return SuiteResult("resolvent", passed, report.slope,
                       f"fitted slope {report.slope:.4f}")


def rescale_suite(lambdas, n_sites: int = 32) -> SuiteResult:
    """Exact singular-value identity under metric rescaling."""
    model = build_model(SpinorLattice(n_sites=n_sites, spacing=0.5), mass=0.5)
    region = Region.half(model.lattice)
    worst = 0.0
    for lam in lambdas:
        report = rescaling_check(model, region, beta=2.0, lam=lam)
        worst = max(worst, report.max_singval_deviation)
    passed = worst <= 1e-10
    return SuiteResult("rescale", passed, worst, f"max identity deviation {worst:.3e}")


def run_suites(cfg: RunConfig, seed: Optional[int] = None) -> List[SuiteResult]:
    """Run the configured suites with one seeded generator; order is fixed."""
    rng = np.random.default_rng(cfg.output.seed if seed is None else seed)
    results: List[SuiteResult] = []
    for name in cfg.check.suites:
        try:
            if name == "car":
                results.append(car_suite(rng, corrupt_theta=cfg.check.corrupt_theta))
            elif name == "wick":
                results.append(wick_suite(rng))
            elif name == "coeff":
                results.append(coeff_suite(rng, n_words=cfg.check.coeff_words))
            elif name == "ps":
                results.append(ps_suite(rng, trials=cfg.check.ps_trials))
            elif name == "factor":
                results.append(factor_suite(rng, instances=cfg.check.factor_instances))
            elif name == "resolvent":
                results.append(resolvent_suite())
            elif name == "rescale":
                results.append(rescale_suite(cfg.check.lambdas))
        except DiracLabError as exc:
            results.append(SuiteResult(name, False, float("nan"), f"error: {exc}"))
    return results

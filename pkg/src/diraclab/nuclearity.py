"""Localized thermal operators, Schatten norms and determinant bounds.

The central object is ``S = 2 E_C exp(-beta h) P`` for a region projector
``E_C`` and the positive-energy projector ``P``.  Its singular values ``t_j``
(the eigenvalues of ``T = (S* S)^(1/2)``) control the damped local excitation
map: coefficients of ``exp(-beta H) A |Omega>`` along ``k``-particle vectors
built from the eigenvectors of ``T`` are bounded by ``t_{i_1} ... t_{i_k}
||A||``, and summing those bounds gives the determinant bound
``[det(1 + (S*S)^(p/2))]^(1/p)``.  The module also provides the trace-norm
scaling scans (in ``beta``, under metric rescaling, and for the localized
resolvent) that make the bound quantitative on a given lattice.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import FitError, GeometryError, RescalingError, StateMismatchError
from .fock import AlgebraElement, FockRep, creation_operator
from .model import (
    OneParticleModel,
    Region,
    SpinorLattice,
    build_model,
    positive_projector,
)
from .states import QuasifreeState

GROUND_STATE_TOL = 1e-8
SUPPORT_RANK_TOL = 1e-13
FIT_WINDOW_T1 = 0.5
DEGENERATE_NORM = 1e-300


def schatten_norm(matrix: np.ndarray, p: float) -> float:
    """Schatten p-(quasi)norm ``(sum sigma_j^p)^(1/p)``; requires ``p > 0``."""
    if not p > 0:
        raise ValueError(f"Schatten order must be positive, got {p}")
    sigma = np.linalg.svd(np.asarray(matrix), compute_uv=False)
    sigma = sigma[sigma > 0]
    if sigma.size == 0:
        return 0.0
    # stable for small p: factor out the largest singular value
    top = sigma[0]
    return float(top * np.sum((sigma / top) ** p) ** (1.0 / p))


@dataclass(eq=False)
class LocalizedThermalOperator:
    """``S = 2 E_C exp(-beta h) P`` with its polar data.

    ``t_singvals`` are all singular values of ``S`` (descending);
    ``mode_t``/``mode_vectors`` are the eigenpairs of ``T`` restricted to the
    positive-energy subspace, which is where ``T`` lives (``T = PT = TP``).
    """

    model: OneParticleModel
    state: QuasifreeState
    region: Region
    beta: float
    s_matrix: np.ndarray
    t_singvals: np.ndarray
    t_matrix: np.ndarray
    v_isometry: np.ndarray
    mode_t: np.ndarray
    mode_vectors: np.ndarray

    @property
    def trace_norm(self) -> float:
        return float(self.t_singvals.sum())

    @property
    def t1(self) -> float:
        return float(self.t_singvals[0]) if self.t_singvals.size else 0.0

    def schatten(self, p: float) -> float:
        if not p > 0:
            raise ValueError(f"Schatten order must be positive, got {p}")
        t = self.t_singvals[self.t_singvals > 0]
        if t.size == 0:
            return 0.0
        top = t[0]
        return float(top * np.sum((t / top) ** p) ** (1.0 / p))


def build_s(
    model: OneParticleModel,
    state: QuasifreeState,
    region: Region,
    beta: float,
) -> LocalizedThermalOperator:
    """Assemble the localized thermal operator and its polar decomposition.

    ``state`` must be the ground state of ``model`` (the construction
    presumes the positive-energy projector); anything else raises
    :class:`StateMismatchError`.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    from .model import ZERO_MODE_TOL

    pos = model.eigenvalues > ZERO_MODE_TOL
    basis = model.eigenvectors[:, pos]
    p_ground = basis @ basis.conj().T
    if np.linalg.norm(state.p_op - p_ground, 2) > GROUND_STATE_TOL:
        raise StateMismatchError("build_s requires the ground state of the model")

    exp_p = (basis * np.exp(-beta * model.eigenvalues[pos])) @ basis.conj().T
    e_diag = region.e_c_diag
    s_matrix = 2.0 * e_diag[:, None] * exp_p

    u_s, sigma, vh = np.linalg.svd(s_matrix)
    cut = SUPPORT_RANK_TOL * max(sigma[0], 1e-300)
    rank = int(np.sum(sigma > cut))
    v_iso = u_s[:, :rank] @ vh[:rank, :]
    t_matrix = (vh.conj().T * sigma) @ vh

    # eigenpairs of T on the positive-energy subspace, via an SVD of S
    # restricted to that subspace (small singular values then carry absolute
    # error ~ eps * t_1 instead of the eps * t_1^2 / t_j of the Gram route)
    y = s_matrix @ basis
    _, sigma_y, wh = np.linalg.svd(y, full_matrices=False)
    mode_t = sigma_y
    mode_vectors = basis @ wh.conj().T

    return LocalizedThermalOperator(
        model=model,
        state=state,
        region=region,
        beta=beta,
        s_matrix=s_matrix,
        t_singvals=sigma,
        t_matrix=t_matrix,
        v_isometry=v_iso,
        mode_t=mode_t,
        mode_vectors=mode_vectors,
    )


@dataclass(frozen=True)
class DetBound:
    """Determinant bound and its wedge-sum cross-check.

    ``value`` is ``[prod (1 + t_j^p)]^(1/p)``; ``wedge_sum`` (when the number
    of modes allows the polynomial expansion) is ``sum_k e_k(t^p)``, the sum
    of traces of the antisymmetric powers, which must equal ``value ** p``.
    """

    p: float
    value: float
    wedge_sum: Optional[float] = None


def det_bound(op: LocalizedThermalOperator, p: float, wedge_max_dim: int = 12) -> DetBound:
    """Bound ``[det(1 + (S*S)^(p/2))]^(1/p)`` on the p-norm of the damped map."""
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    t = op.mode_t
    value = float(np.exp(np.sum(np.log1p(t**p)) / p))
    wedge = None
    if t.size <= wedge_max_dim:
        # elementary symmetric sums via polynomial expansion of prod (x + t^p)
        coeffs = np.poly(-(t**p))
        wedge = float(np.real(np.sum(coeffs)))
    return DetBound(p=float(p), value=value, wedge_sum=wedge)


@dataclass(frozen=True)
class CoefficientReport:
    """Worst-case margin of the coefficient inequality over mode subsets."""

    beta: float
    a_norm: float
    k_max: int
    n_subsets: int
    max_violation: float  # max over subsets of |<Phi_I|exp(-bH) A Omega>| - t_I ||A||
    worst_subset: Tuple[int, ...]
    max_lhs: float


def coefficient_inequality_check(
    rep: FockRep,
    h_fock: np.ndarray,
    op: LocalizedThermalOperator,
    element: AlgebraElement,
    k_max: Optional[int] = None,
) -> CoefficientReport:
    """Check ``|<Phi_I | exp(-beta H) A Omega>| <= t_{i_1} ... t_{i_k} ||A||``.

    ``Phi_I`` runs over all ordered mode subsets of size ``k <= k_max`` built
    from the eigenvectors of ``T``; the element must be supported in the
    operator's region.
    """
    element.check_support(op.region)
    m = op.mode_t.size
    if k_max is None:
        k_max = min(m, 6)
    k_max = min(k_max, m)

    a_mat = element.to_matrix(rep)
    a_norm = float(np.linalg.norm(a_mat, 2))
    w, v = np.linalg.eigh(h_fock)
    vec = a_mat @ rep.omega_vec
    damped = v @ (np.exp(-op.beta * w) * (v.conj().T @ vec))

    creators = [creation_operator(rep, op.mode_vectors[:, j]) for j in range(m)]
    max_violation = -np.inf
    worst: Tuple[int, ...] = ()
    max_lhs = 0.0
    n_subsets = 0
    for k in range(k_max + 1):
        for subset in itertools.combinations(range(m), k):
            phi = rep.omega_vec
            for idx in reversed(subset):
                phi = creators[idx] @ phi
            lhs = abs(np.vdot(phi, damped))
            rhs = float(np.prod(op.mode_t[list(subset)])) * a_norm
            n_subsets += 1
            max_lhs = max(max_lhs, lhs)
            if lhs - rhs > max_violation:
                max_violation = lhs - rhs
                worst = subset
    return CoefficientReport(
        beta=op.beta,
        a_norm=a_norm,
        k_max=k_max,
        n_subsets=n_subsets,
        max_violation=float(max_violation),
        worst_subset=worst,
        max_lhs=float(max_lhs),
    )


@dataclass(eq=False)
class NuclearityReport:
    """Results of a trace-norm scan over a temperature grid."""

    beta_grid: np.ndarray
    s_trace_norms: np.ndarray
    t1_values: np.ndarray
    mode_t: np.ndarray  # (n_beta, M), descending per row
    p_values: Tuple[float, ...]
    p_norms: Dict[float, np.ndarray]
    det_bounds: Dict[float, np.ndarray]
    nu_bounds: np.ndarray
    gap: float
    m0: float
    spatial_dim: int
    fit_window: np.ndarray  # bool mask
    fitted_beta0: float
    fit_rms: float
    fit_residuals: np.ndarray  # nan outside the window
    violations: list
    degenerate: bool  # empty/degenerate region: norms vanish, no fit

    @property
    def envelope(self) -> np.ndarray:
        """``beta^s exp(beta gap / 2) ||S||_1`` per grid point."""
        b = self.beta_grid
        return b**self.spatial_dim * np.exp(b * self.gap / 2.0) * self.s_trace_norms


def _fit_beta0(betas, trace_norms, gap, spatial_dim, window):
    logs = np.log(trace_norms[window])
    b = betas[window]
    log_beta0 = float(np.mean(logs + spatial_dim * np.log(b) + b * gap / 2.0) / spatial_dim)
    residuals = np.full(betas.shape, np.nan)
    residuals[window] = logs - (
        spatial_dim * (log_beta0 - np.log(b)) - b * gap / 2.0
    )
    rms = float(np.sqrt(np.mean(residuals[window] ** 2)))
    return float(np.exp(log_beta0)), rms, residuals


def nuclearity_scan(
    model: OneParticleModel,
    region: Region,
    beta_grid: Sequence[float],
    p_values: Tuple[float, ...] = (0.5, 1.0, 2.0),
    workers: int = 1,
) -> NuclearityReport:
    """Scan ``||S||_1``, Schatten norms and determinant bounds over a beta grid.

    The grid must be positive, strictly ascending, with at least 8 points.
    The two-term model ``s log(beta0 / beta) - beta gap / 2`` is fitted to
    ``log ||S||_1`` over the window ``t_1 < 0.5`` (with the measured spectral
    gap); an empty window on a non-degenerate region raises :class:`FitError`.
    """
    betas = np.asarray(list(beta_grid), dtype=float)
    if betas.size < 8:
        raise ValueError(f"beta grid needs at least 8 points, got {betas.size}")
    if np.any(betas <= 0) or np.any(np.diff(betas) <= 0):
        raise ValueError("beta grid must be positive and strictly ascending")

    state = positive_projector(model)

    def one(beta: float) -> LocalizedThermalOperator:
        return build_s(model, state, region, beta)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ops = list(pool.map(one, betas))
    else:
        ops = [one(b) for b in betas]

    trace_norms = np.array([op.trace_norm for op in ops])
    t1s = np.array([op.t1 for op in ops])
    mode_t = np.vstack([op.mode_t for op in ops])
    p_norms = {p: np.array([op.schatten(p) for op in ops]) for p in p_values}
    det_bounds = {p: np.array([det_bound(op, p, wedge_max_dim=0).value for op in ops])
                  for p in p_values}
    nu_bounds = np.exp(trace_norms)
    gap = model.min_positive_eigenvalue
    s_dim = model.lattice.spatial_dim

    degenerate = bool(np.all(trace_norms < DEGENERATE_NORM))
    violations: list = []
    if not degenerate:
        for p in p_values:
            if np.any(det_bounds[p] < 1.0 - 1e-12):
                violations.append(f"det bound below 1 for p={p}")
        if np.any(nu_bounds + 1e-12 < det_bounds.get(1.0, nu_bounds)):
            violations.append("exp(||T||_1) fell below det(1 + T)")
        if np.any(np.diff(trace_norms) >= 0):
            violations.append("||S||_1 is not strictly decreasing in beta")
        if np.any(np.diff(mode_t, axis=0) > 1e-12):
            violations.append("some t_j increased along the beta grid")

    window = t1s < FIT_WINDOW_T1
    if degenerate:
        beta0, rms = float("nan"), float("nan")
        residuals = np.full(betas.shape, np.nan)
        window = np.zeros(betas.shape, dtype=bool)
    else:
        if not np.any(window):
            raise FitError(
                f"fit window t1 < {FIT_WINDOW_T1} is empty (t1 range "
                f"[{t1s.min():.3e}, {t1s.max():.3e}])"
            )
        beta0, rms, residuals = _fit_beta0(betas, trace_norms, gap, s_dim, window)

    return NuclearityReport(
        beta_grid=betas,
        s_trace_norms=trace_norms,
        t1_values=t1s,
        mode_t=mode_t,
        p_values=tuple(p_values),
        p_norms=p_norms,
        det_bounds=det_bounds,
        nu_bounds=nu_bounds,
        gap=gap,
        m0=model.m0,
        spatial_dim=s_dim,
        fit_window=window,
        fitted_beta0=beta0,
        fit_rms=rms,
        fit_residuals=residuals,
        violations=violations,
        degenerate=degenerate,
    )


def rescaled_model(model: OneParticleModel, lam: float) -> OneParticleModel:
    """Lattice realization of the metric rescaling ``g -> lam^2 g``.

    Proper distances grow by ``lam`` (spacing ``a -> lam a``); the matching
    renormalization of the time translation enters automatically through the
    ``1/spacing`` in the derivative, so that ``h' = h(mass lam m) / lam`` on
    the original grid.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    lat = model.lattice
    scaled = SpinorLattice(
        n_sites=lat.n_sites,
        spacing=lat.spacing * lam,
        lapse=np.array(lat.lapse),
        periodic=lat.periodic,
    )
    return build_model(scaled, model.mass)


@dataclass(frozen=True)
class RescalingReport:
    lam: float
    beta: float
    max_singval_deviation: float
    trace_norm_rescaled: float
    trace_norm_reference: float


def rescaling_check(
    model: OneParticleModel,
    region: Region,
    beta: float,
    lam: float,
    tol: float = 1e-10,
) -> RescalingReport:
    """Assert the exact singular-value identity of the rescaled operator.

    The singular values of ``S`` built on the rescaled lattice at inverse
    temperature ``beta`` must equal those of ``S`` built from the mass-scaled
    model (mass ``lam m``) on the original grid at ``beta / lam``.  A
    violation beyond ``tol`` indicates a construction bug and raises
    :class:`RescalingError`.
    """
    prime = rescaled_model(model, lam)
    region_prime = Region(prime.lattice, region.sites)
    reference = build_model(model.lattice, lam * model.mass)
    region_ref = Region(reference.lattice, region.sites)

    op_prime = build_s(prime, positive_projector(prime), region_prime, beta)
    op_ref = build_s(reference, positive_projector(reference), region_ref, beta / lam)
    deviation = float(np.max(np.abs(op_prime.t_singvals - op_ref.t_singvals)))
    if deviation > tol * max(1.0, op_ref.t1):
        raise RescalingError(
            f"rescaling identity violated: max singular-value deviation {deviation:.3e}"
        )
    return RescalingReport(
        lam=float(lam),
        beta=float(beta),
        max_singval_deviation=deviation,
        trace_norm_rescaled=op_prime.trace_norm,
        trace_norm_reference=op_ref.trace_norm,
    )


@dataclass(frozen=True)
class Beta0ScalingReport:
    lam: float
    beta0_base: float
    beta0_rescaled: float

    @property
    def ratio(self) -> float:
        return self.beta0_rescaled / self.beta0_base


def beta0_rescaling(
    model: OneParticleModel,
    region: Region,
    beta_grid: Sequence[float],
    lam: float,
    p_values: Tuple[float, ...] = (1.0,),
) -> Beta0ScalingReport:
    """Fitted ``beta0`` of the base model versus the rescaled model."""
    base = nuclearity_scan(model, region, beta_grid, p_values)
    prime = rescaled_model(model, lam)
    region_prime = Region(prime.lattice, region.sites)
    scaled = nuclearity_scan(prime, region_prime, beta_grid, p_values)
    return Beta0ScalingReport(
        lam=float(lam),
        beta0_base=base.fitted_beta0,
        beta0_rescaled=scaled.fitted_beta0,
    )


@dataclass(eq=False)
class ResolventReport:
    """Trace norms of the smoothed localized resolvent over a beta grid."""

    beta_grid: np.ndarray
    norms: np.ndarray
    s_power: int
    lam_max: float
    window: np.ndarray
    slope: float
    c_sup: float  # sup over the grid of beta^s * norm
    hs_norms: Dict[int, np.ndarray]  # Hilbert-Schmidt factors, n = 1, 2


def resolvent_trace_scan(
    model: OneParticleModel,
    region: Region,
    beta_grid: Sequence[float],
    s_power: int = 1,
    window_threshold: float = 10.0,
) -> ResolventReport:
    """Scan ``||M_chi (1 + beta^2 h^2)^(-s) M_chi||_1`` over a beta grid.

    Evaluated exactly in the eigenbasis of ``h``.  The log-log slope is
    fitted over the window ``beta * lam_max > window_threshold``; an empty
    window raises :class:`FitError`.  Also reports the Hilbert-Schmidt norms
    of the two smoothing factors ``(1 + b^2 h^2)^((n-1)s/2) M_chi
    (1 + b^2 h^2)^(-ns/2)`` for ``n = 1, 2``.
    """
    if region.chi is None:
        raise GeometryError("resolvent scan needs a region with a smooth chi profile")
    betas = np.asarray(list(beta_grid), dtype=float)
    if betas.size < 2 or np.any(betas <= 0) or np.any(np.diff(betas) <= 0):
        raise ValueError("beta grid must be positive, strictly ascending, with >= 2 points")

    lam = model.eigenvalues
    u = model.eigenvectors
    m_diag = region.m_chi_diag
    weights = (np.abs(u) ** 2 * (m_diag**2)[:, None]).sum(axis=0)
    norms = np.array([(weights / (1.0 + (b * lam) ** 2) ** s_power).sum() for b in betas])

    lam_max = float(np.abs(lam).max())
    window = betas * lam_max > window_threshold
    if not np.any(window):
        raise FitError(
            f"window beta * lam_max > {window_threshold} is empty "
            f"(lam_max = {lam_max:.3e}, beta max = {betas.max():.3e})"
        )
    positive = norms[window] > 0
    if not np.all(positive):
        slope = float("nan")
    else:
        slope = float(np.polyfit(np.log(betas[window]), np.log(norms[window]), 1)[0])
    c_sup = float(np.max(betas**s_power * norms))

    m_tilde = u.conj().T @ (m_diag[:, None] * u)
    abs2 = np.abs(m_tilde) ** 2
    hs_norms = {}
    for n in (1, 2):
        vals = []
        for b in betas:
            d = 1.0 + (b * lam) ** 2
            w = (d ** ((n - 1) * s_power))[:, None] * abs2 * (d ** (-n * s_power))[None, :]
            vals.append(np.sqrt(w.sum()))
        hs_norms[n] = np.array(vals)

    return ResolventReport(
        beta_grid=betas,
        norms=norms,
        s_power=int(s_power),
        lam_max=lam_max,
        window=window,
        slope=slope,
        c_sup=c_sup,
        hs_norms=hs_norms,
    )


@dataclass(frozen=True)
class RangeDensityReport:
    rank: int
    dim_h: int
    sigma_min: float

    @property
    def full_rank(self) -> bool:
        return self.rank == self.dim_h


def range_density_check(op: LocalizedThermalOperator) -> RangeDensityReport:
    """Rank of ``P E_C`` against the dimension of the positive-energy subspace.

    At finite dimension, density of the range of ``S*`` means full rank; the
    smallest singular value of ``P E_C`` restricted to that subspace is
    reported as a conditioning diagnostic.
    """
    basis = op.mode_vectors
    m = basis.shape[1]
    a = basis.conj().T * op.region.e_c_diag[None, :]
    sigma = np.linalg.svd(a, compute_uv=False)
    rank = int(np.sum(sigma > 1e-10))
    sigma_min = float(sigma[m - 1]) if sigma.size >= m else 0.0
    return RangeDensityReport(rank=rank, dim_h=m, sigma_min=sigma_min)

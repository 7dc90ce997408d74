"""Quasiequivalence distances and the real-subspace factoriality criterion.

Two quasifree states restricted to a region are compared through the
Hilbert-Schmidt distance of the square roots of their compressed operators
and the trace norm of the compressed difference; the former squared never
exceeds the latter (Powers-Stormer inequality).  Factoriality of the local
algebra is equivalent to trivial intersection of the real-linear subspace
``M(C) = span_R { P^(1/2) k : supp k in C, C k = k }`` with ``i`` times its
symplectic complement; at finite dimension this is decided by principal
angles between real subspaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import null_space, subspace_angles

from .errors import CheckFailure
from .model import ChargeConjugation, Region
from .states import QuasifreeState, restrict

PS_SLACK_TOL = -1e-10
ANGLE_TOL = 1e-8
MAJORANA_TOL = 1e-12


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(a)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def _trace_norm(a: np.ndarray) -> float:
    return float(np.linalg.svd(a, compute_uv=False).sum())


def ps_inequality_test(a: np.ndarray, b: np.ndarray) -> float:
    """Slack ``||a - b||_1 - ||a^(1/2) - b^(1/2)||_2^2`` for positive matrices.

    Must be nonnegative up to roundoff for any two bounded positive
    operators.  Non-Hermitian or indefinite input raises ``ValueError``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    for name, m in (("a", a), ("b", b)):
        scale = max(1.0, np.linalg.norm(m, 2))
        if np.linalg.norm(m - m.conj().T, 2) > 1e-10 * scale:
            raise ValueError(f"matrix {name} is not Hermitian")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() < -1e-8 * scale:
            raise ValueError(f"matrix {name} is not positive semidefinite")
    hs = np.linalg.norm(_psd_sqrt(a) - _psd_sqrt(b))
    return _trace_norm(a - b) - float(hs**2)


@dataclass(frozen=True)
class QuasiequivalenceReport:
    """Powers-Stormer quantities for a pair of states on one region."""

    region_fraction: float
    n_sites: int
    hs_distance: float
    trace_distance: float

    @property
    def ps_inequality_slack(self) -> float:
        return self.trace_distance - self.hs_distance**2


def powers_stormer(
    state1: QuasifreeState,
    state2: QuasifreeState,
    region: Region,
) -> QuasiequivalenceReport:
    """Hilbert-Schmidt and trace-norm criterion quantities on a region."""
    if state1.dim != state2.dim:
        raise ValueError("states live on different one-particle spaces")
    a = restrict(state1, region).p_compressed
    b = restrict(state2, region).p_compressed
    hs = float(np.linalg.norm(_psd_sqrt(a) - _psd_sqrt(b)))
    tr = _trace_norm(a - b)
    report = QuasiequivalenceReport(
        region_fraction=region.fraction,
        n_sites=region.lattice.n_sites,
        hs_distance=hs,
        trace_distance=tr,
    )
    if report.ps_inequality_slack < PS_SLACK_TOL:
        raise CheckFailure(
            f"Powers-Stormer inequality violated: slack {report.ps_inequality_slack:.3e}"
        )
    return report


def _realify(vectors: np.ndarray) -> np.ndarray:
    """Stack complex columns into real columns of doubled dimension."""
    return np.vstack([vectors.real, vectors.imag])


def _apply_i(real_cols: np.ndarray) -> np.ndarray:
    """Multiplication by i in realified coordinates."""
    m = real_cols.shape[0] // 2
    return np.vstack([-real_cols[m:], real_cols[:m]])


def _orthonormal(real_cols: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if real_cols.size == 0:
        return real_cols.reshape(real_cols.shape[0], 0)
    q, r = np.linalg.qr(real_cols)
    keep = np.abs(np.diag(r)) > tol * max(1.0, np.abs(r).max())
    return q[:, keep]


@dataclass(frozen=True)
class RealSubspace:
    """Real-linear subspace given by an orthonormal real basis (columns)."""

    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def symplectic_complement(self) -> "RealSubspace":
        """All realified vectors with vanishing ``Im(m | .)`` against the span.

        With columns ``b`` realified, ``Im(b | w) = -b^T J w`` where ``J`` is
        multiplication by i, so the complement is the null space of
        ``(J basis)^T``.
        """
        j_basis = _apply_i(self.basis)
        if self.dim == 0:
            d = self.basis.shape[0]
            return RealSubspace(np.eye(d))
        kernel = null_space(j_basis.T)
        return RealSubspace(_orthonormal(kernel))

    def multiply_i(self) -> "RealSubspace":
        return RealSubspace(_orthonormal(_apply_i(self.basis)))


def majorana_basis(region: Region, conj: ChargeConjugation) -> List[np.ndarray]:
    """Real-orthonormal basis of conjugation-fixed vectors supported in the region.

    The real dimension equals the complex dimension of the region's subspace,
    since the conjugation is an antiunitary involution there.
    """
    dim = conj.theta.shape[0]
    n = region.lattice.n_sites
    indices = [s * n + x for s in range(region.lattice.spinor_dim) for x in region.sites]
    basis: List[np.ndarray] = []
    for l in indices:
        e = np.zeros(dim, dtype=complex)
        e[l] = 1.0
        for cand in (e + conj.apply(e), 1j * (e - conj.apply(e))):
            w = cand.copy()
            for b in basis:
                w = w - b * np.real(np.vdot(b, w))
            nrm = np.linalg.norm(w)
            if nrm > 1e-10:
                basis.append(w / nrm)
    expected = len(indices)
    if len(basis) != expected:
        raise CheckFailure(
            f"Majorana basis has real dimension {len(basis)}, expected {expected}"
        )
    for b in basis:
        if np.linalg.norm(conj.apply(b) - b) > MAJORANA_TOL:
            raise CheckFailure("Majorana basis vector is not conjugation-fixed")
    return basis


@dataclass(frozen=True)
class FactorialityReport:
    """Principal-angle diagnostics for ``M(C)`` against ``i M(C)'``."""

    intersection_dim: int
    min_angle: float
    dim_m: int
    dim_complement: int
    offending_vectors: Optional[np.ndarray]  # realified, one per near-zero angle

    @property
    def trivial_intersection(self) -> bool:
        return self.intersection_dim == 0


def factoriality_check(
    state: QuasifreeState,
    region: Region,
    angle_tol: float = ANGLE_TOL,
) -> FactorialityReport:
    """Dimension of ``M(C) ∩ i M(C)'`` via principal angles between real subspaces.

    ``M(C)`` is the real span of ``P^(1/2) k`` over conjugation-fixed ``k``
    supported in the region; the symplectic complement is taken inside the
    one-particle space of the state (the range of ``P^(1/2)``).  Angles below
    ``angle_tol`` count as intersection and their directions are reported,
    never silently rounded.
    """
    if region.is_empty:
        dim_h = int(np.linalg.matrix_rank(state.sqrt_p, tol=1e-12))
        return FactorialityReport(0, float(np.pi / 2), 0, 2 * dim_h, None)

    # orthonormal complex basis of the one-particle space H = range(P^(1/2))
    w, v = np.linalg.eigh(state.p_op)
    keep = w > 1e-12
    h_basis = v[:, keep]

    maj = majorana_basis(region, state.conj)
    images = np.column_stack([state.sqrt_p @ m for m in maj])
    coords = h_basis.conj().T @ images
    residual = np.linalg.norm(images - h_basis @ coords)
    if residual > 1e-10 * max(1.0, np.linalg.norm(images)):
        raise CheckFailure("region subspace leaves the range of P^(1/2)")

    m_space = RealSubspace(_orthonormal(_realify(coords)))
    i_complement = m_space.symplectic_complement().multiply_i()
    if m_space.dim == 0 or i_complement.dim == 0:
        return FactorialityReport(0, float(np.pi / 2), m_space.dim, i_complement.dim, None)

    angles = subspace_angles(m_space.basis, i_complement.basis)
    angles = np.sort(angles)
    crossing = angles < angle_tol
    offenders = None
    if np.any(crossing):
        # recover directions for the near-zero angles from the cosine SVD
        u, sigma, _ = np.linalg.svd(m_space.basis.T @ i_complement.basis)
        n_bad = int(crossing.sum())
        offenders = m_space.basis @ u[:, :n_bad]
    return FactorialityReport(
        intersection_dim=int(crossing.sum()),
        min_angle=float(angles[0]),
        dim_m=m_space.dim,
        dim_complement=i_complement.dim,
        offending_vectors=offenders,
    )


@dataclass(frozen=True)
class FactorInstance:
    """One seeded strictly-mixed (state, region) factoriality instance."""

    index: int
    n_sites: int
    mass: float
    beta: float
    region_sites: int
    report: FactorialityReport


def seeded_instances(
    seed: int,
    count: int,
    max_sites: int = 16,
    min_sites: int = 4,
    spacing: float = 1.0,
) -> List[FactorInstance]:
    """Seeded strictly-mixed states on random lattices with proper subregions."""
    from .model import SpinorLattice, build_model
    from .states import thermal_state

    rng = np.random.default_rng(seed)
    instances = []
    for index in range(count):
        n = int(rng.integers(min_sites, max_sites + 1))
        mass = float(rng.uniform(0.5, 1.5))
        beta = float(rng.uniform(0.5, 3.0))
        model = build_model(SpinorLattice(n_sites=n, spacing=spacing), mass)
        state = thermal_state(model, beta)
        size = int(rng.integers(1, n))
        region = Region.from_range(model.lattice, 0, size)
        instances.append(FactorInstance(
            index=index, n_sites=n, mass=mass, beta=beta, region_sites=size,
            report=factoriality_check(state, region),
        ))
    return instances


def refinement_series(
    sizes: Sequence[int],
    spacing: float,
    mass: float,
    region_fraction: float,
    rank: int,
    decay: float,
    scale: float,
) -> List[QuasiequivalenceReport]:
    """Ground state versus its smooth perturbation across lattice refinements.

    Fixed region fraction, perturbation rank, decay and scale; returns one
    Powers-Stormer report per lattice size.
    """
    from .model import SpinorLattice, build_model, positive_projector
    from .states import smooth_perturbation

    reports = []
    for n in sizes:
        lattice = SpinorLattice(n_sites=int(n), spacing=spacing)
        model = build_model(lattice, mass)
        ground = positive_projector(model)
        perturbed = smooth_perturbation(ground, rank=rank, decay=decay, scale=scale)
        region = Region.from_range(lattice, 0, max(1, int(round(region_fraction * n))))
        reports.append(powers_stormer(ground, perturbed, region))
    return reports

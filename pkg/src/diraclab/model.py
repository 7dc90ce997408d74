"""One-particle model: lattice geometry, charge conjugation, the static
Dirac Hamiltonian and its spectral data.

The one-particle space ``K`` is ``C^(spinor_dim * n_sites)`` with the standard
inner product; index layout is ``(spinor, site) -> spinor * n_sites + site``,
i.e. operators factorize as ``kron(spinor_part, site_part)``.

The Hamiltonian on a periodic chain with lapse ``v(x)`` and mass ``m`` is

    h = -(i/2) * s3 (x) (V D + D V) + s1 (x) (V m)

with ``D`` the central-difference derivative, ``V = diag(v)`` and ``s1, s3``
Pauli matrices.  Charge conjugation is ``C k = theta conj(k)`` with
``theta = s3 (x) 1``; this makes ``C h C = -h`` exact, so the spectrum comes
in ``+/- lambda`` pairs.  Fermion doubling of the central difference is
accepted: every statement checked downstream only needs a Hermitian ``h``
with ``C h C = -h`` and a spectral gap, not continuum fidelity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import GeometryError, StateError, ZeroModeError

HERM_TOL = 1e-12
ZERO_MODE_TOL = 1e-10

_SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]])
_SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]])


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpinorLattice:
    """Periodic 1d spinor lattice with a per-site lapse profile.

    Parameters
    ----------
    n_sites:
        Number of spatial sites, at least 2.
    spacing:
        Lattice spacing (length units), positive.
    lapse:
        Per-site lapse ``v(x) > 0`` (dimensionless).  Scalars broadcast.
    """

    n_sites: int
    spacing: float = 1.0
    lapse: np.ndarray = field(default=None)  # type: ignore[assignment]
    periodic: bool = True
    spinor_dim: int = 2
    spatial_dim: int = 1

    def __post_init__(self):
        if self.n_sites < 2:
            raise GeometryError(f"n_sites must be >= 2, got {self.n_sites}")
        if not self.spacing > 0:
            raise GeometryError(f"spacing must be positive, got {self.spacing}")
        if not self.periodic:
            raise GeometryError("only periodic lattices are supported")
        if self.spatial_dim != 1 or self.spinor_dim != 2:
            raise GeometryError("only spatial_dim=1 with spinor_dim=2 is supported")
        lapse = self.lapse
        if lapse is None:
            lapse = np.ones(self.n_sites)
        lapse = np.broadcast_to(np.asarray(lapse, dtype=float), (self.n_sites,)).copy()
        if np.any(lapse <= 0):
            bad = int(np.argmin(lapse))
            raise GeometryError(f"lapse must be positive everywhere, got {lapse[bad]} at site {bad}")
        object.__setattr__(self, "lapse", _frozen(lapse))

    @property
    def v0(self) -> float:
        """Minimum of the lapse; positive by construction."""
        return float(self.lapse.min())

    @property
    def dim(self) -> int:
        """Dimension of the one-particle space."""
        return self.n_sites * self.spinor_dim


@dataclass(frozen=True)
class ChargeConjugation:
    """Antiunitary involution ``C k = theta conj(k)`` on the one-particle space."""

    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _frozen(np.asarray(self.theta)))

    def apply(self, k: np.ndarray) -> np.ndarray:
        return self.theta @ np.conj(k)

    __call__ = apply

    def conjugate_operator(self, x: np.ndarray) -> np.ndarray:
        """Return ``C X C`` for a matrix ``X``."""
        return self.theta @ np.conj(x) @ self.theta.conj().T

    def involution_defect(self) -> float:
        """``||theta conj(theta) - 1||``; zero for a genuine involution."""
        d = self.theta.shape[0]
        return float(np.linalg.norm(self.theta @ np.conj(self.theta) - np.eye(d), 2))


@dataclass(frozen=True)
class Region:
    """Subset of lattice sites with its multiplication projector.

    ``e_c`` selects both spinor components on the chosen sites, so it is
    diagonal in the site basis and commutes with charge conjugation.  An
    optional smooth cutoff profile ``chi`` (1 on the region, in [0, 1]
    everywhere) supports the localized-resolvent scans.
    """

    lattice: SpinorLattice
    sites: tuple
    chi: Optional[np.ndarray] = None

    def __post_init__(self):
        sites = tuple(sorted(set(int(s) for s in self.sites)))
        if sites and (sites[0] < 0 or sites[-1] >= self.lattice.n_sites):
            raise GeometryError(f"region sites must lie in [0, {self.lattice.n_sites})")
        object.__setattr__(self, "sites", sites)
        if self.chi is not None:
            chi = np.asarray(self.chi, dtype=float)
            if chi.shape != (self.lattice.n_sites,):
                raise GeometryError("chi profile must have one value per site")
            if np.any(chi < -1e-12) or np.any(chi > 1 + 1e-12):
                raise GeometryError("chi profile must take values in [0, 1]")
            mask = np.zeros(self.lattice.n_sites, dtype=bool)
            mask[list(sites)] = True
            if sites and not np.allclose(chi[mask], 1.0, atol=1e-12):
                raise GeometryError("chi must be identically 1 on the region")
            object.__setattr__(self, "chi", _frozen(chi))

    @classmethod
    def from_range(cls, lattice: SpinorLattice, start: int, stop: int) -> "Region":
        return cls(lattice, tuple(range(start, stop)))

    @classmethod
    def half(cls, lattice: SpinorLattice) -> "Region":
        return cls.from_range(lattice, 0, lattice.n_sites // 2)

    @classmethod
    def empty(cls, lattice: SpinorLattice) -> "Region":
        return cls(lattice, ())

    @classmethod
    def full(cls, lattice: SpinorLattice) -> "Region":
        return cls(lattice, tuple(range(lattice.n_sites)))

    @property
    def n_selected(self) -> int:
        return len(self.sites)

    @property
    def is_empty(self) -> bool:
        return not self.sites

    @property
    def fraction(self) -> float:
        return self.n_selected / self.lattice.n_sites

    @property
    def indicator(self) -> np.ndarray:
        """Per-site 0/1 indicator."""
        ind = np.zeros(self.lattice.n_sites)
        if self.sites:
            ind[list(self.sites)] = 1.0
        return ind

    @property
    def e_c_diag(self) -> np.ndarray:
        """Diagonal of the projector on K (both spinor components per site)."""
        return np.tile(self.indicator, self.lattice.spinor_dim)

    @property
    def e_c(self) -> np.ndarray:
        return np.diag(self.e_c_diag)

    @property
    def m_chi_diag(self) -> np.ndarray:
        """Diagonal of the smooth multiplication operator; falls back to e_c."""
        prof = self.chi if self.chi is not None else self.indicator
        return np.tile(prof, self.lattice.spinor_dim)

    def complement(self) -> "Region":
        other = tuple(s for s in range(self.lattice.n_sites) if s not in set(self.sites))
        return Region(self.lattice, other)

    def with_smooth_chi(self, width: int) -> "Region":
        """Attach a cosine-squared falloff of ``width`` sites outside the region."""
        n = self.lattice.n_sites
        if self.is_empty:
            return Region(self.lattice, self.sites, np.zeros(n))
        sites = np.asarray(self.sites)
        x = np.arange(n)
        # periodic distance to the nearest region site
        d = np.abs(x[:, None] - sites[None, :])
        d = np.minimum(d, n - d).min(axis=1)
        chi = np.zeros(n)
        chi[d == 0] = 1.0
        ramp = (d > 0) & (d <= width)
        chi[ramp] = np.cos(0.5 * np.pi * d[ramp] / (width + 1)) ** 2
        return Region(self.lattice, self.sites, chi)


@dataclass(frozen=True)
class OneParticleModel:
    """Hermitian lattice Dirac Hamiltonian with charge conjugation and cached spectrum."""

    lattice: SpinorLattice
    h: np.ndarray
    conj: ChargeConjugation
    mass: float
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns match eigenvalues

    def __post_init__(self):
        object.__setattr__(self, "h", _frozen(self.h))
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))
        object.__setattr__(self, "eigenvectors", _frozen(self.eigenvectors))

    @property
    def dim(self) -> int:
        return self.h.shape[0]

    @property
    def m0(self) -> float:
        """Lapse-weighted mass ``v0 * m``."""
        return self.lattice.v0 * self.mass

    @property
    def spectral_gap(self) -> float:
        """Smallest ``|lambda|`` over the spectrum."""
        return float(np.abs(self.eigenvalues).min())

    @property
    def min_positive_eigenvalue(self) -> float:
        pos = self.eigenvalues[self.eigenvalues > ZERO_MODE_TOL]
        if pos.size == 0:
            raise ZeroModeError("spectrum has no eigenvalue above the zero-mode tolerance")
        return float(pos.min())

    @property
    def has_zero_modes(self) -> bool:
        return bool(np.any(np.abs(self.eigenvalues) < ZERO_MODE_TOL))

    def function_of_h(self, f) -> np.ndarray:
        """Evaluate a scalar function of ``h`` in the eigenbasis."""
        u = self.eigenvectors
        return (u * f(self.eigenvalues)) @ u.conj().T


def central_difference(n_sites: int, spacing: float) -> np.ndarray:
    """Real antisymmetric central-difference matrix with periodic wrap."""
    d = np.zeros((n_sites, n_sites))
    idx = np.arange(n_sites)
    d[idx, (idx + 1) % n_sites] += 1.0 / (2.0 * spacing)
    d[idx, (idx - 1) % n_sites] -= 1.0 / (2.0 * spacing)
    return d


def build_model(lattice: SpinorLattice, mass: float) -> OneParticleModel:
    """Assemble the lattice Dirac Hamiltonian and its spectral decomposition.

    Parameters
    ----------
    lattice:
        Periodic spinor lattice.
    mass:
        Nonnegative mass.  ``mass = 0`` builds fine but the positive-energy
        projector will then require an explicit zero-mode policy.

    Returns
    -------
    OneParticleModel
        With ``h`` Hermitian and ``C h C = -h`` verified to ``1e-12``
        (relative), eigendecomposition cached.
    """
    if mass < 0:
        raise GeometryError(f"mass must be nonnegative, got {mass}")
    n = lattice.n_sites
    v = np.diag(lattice.lapse)
    d = central_difference(n, lattice.spacing)
    kinetic = -0.5j * np.kron(_SIGMA3, v @ d + d @ v)
    mass_term = np.kron(_SIGMA1, v * mass)
    h = kinetic + mass_term

    conj = ChargeConjugation(np.kron(_SIGMA3, np.eye(n)))
    scale = max(np.linalg.norm(h, 2), 1e-300)
    herm_defect = np.linalg.norm(h - h.conj().T, 2) / scale
    if herm_defect > HERM_TOL:
        raise GeometryError(f"assembled h is not Hermitian (defect {herm_defect:.2e})")
    odd_defect = np.linalg.norm(conj.conjugate_operator(h) + h, 2) / scale
    if odd_defect > HERM_TOL:
        raise GeometryError(f"assembled h does not anticommute with C (defect {odd_defect:.2e})")

    eigenvalues, eigenvectors = np.linalg.eigh(h)
    return OneParticleModel(
        lattice=lattice,
        h=h,
        conj=conj,
        mass=float(mass),
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
    )


def _split_kernel(model: OneParticleModel, kernel: np.ndarray) -> np.ndarray:
    """Deterministic half of the zero-mode space W with C W orthogonal to W.

    Build a real-orthonormal basis of conjugation-fixed vectors of the kernel
    (lowest index first) and pair consecutive ones as (m1 + i m2)/sqrt(2).
    """
    c = model.conj
    dim, r = kernel.shape
    if r % 2:
        raise ZeroModeError("zero-mode space has odd dimension; cannot split symmetrically")
    candidates = []
    for j in range(r):
        z = kernel[:, j]
        candidates.append(z + c.apply(z))
        candidates.append(1j * (z - c.apply(z)))
    fixed: list[np.ndarray] = []
    for cand in candidates:
        w = cand.copy()
        for b in fixed:
            w = w - b * np.real(np.vdot(b, w))
        nrm = np.linalg.norm(w)
        if nrm > 1e-8:
            fixed.append(w / nrm)
        if len(fixed) == r:
            break
    if len(fixed) < r:
        raise ZeroModeError("failed to build a conjugation-fixed basis of the zero-mode space")
    cols = [(fixed[2 * j] + 1j * fixed[2 * j + 1]) / np.sqrt(2.0) for j in range(r // 2)]
    return np.column_stack(cols)


def positive_projector(model: OneParticleModel, zero_mode_policy: str = "reject"):
    """Spectral projector onto the positive-energy subspace, as a quasifree state.

    ``P = sum_{lambda_j > 0} |e_j><e_j|`` satisfies ``P^2 = P`` and
    ``C P C = 1 - P``.  Eigenvalues within ``1e-10`` of zero raise
    :class:`ZeroModeError` unless ``zero_mode_policy="positive"``, which
    assigns a deterministic conjugation-compatible half of the kernel to the
    positive side and flags the state as non-gapped.
    """
    from .states import QuasifreeState

    lam = model.eigenvalues
    u = model.eigenvectors
    zero = np.abs(lam) < ZERO_MODE_TOL
    pos = lam >= ZERO_MODE_TOL
    if np.any(zero):
        if zero_mode_policy == "reject":
            raise ZeroModeError(
                f"{int(zero.sum())} eigenvalue(s) within {ZERO_MODE_TOL} of zero; "
                "set zero_mode_policy='positive' to proceed"
            )
        if zero_mode_policy != "positive":
            raise ValueError(f"unknown zero_mode_policy {zero_mode_policy!r}")
    basis = u[:, pos]
    if np.any(zero) and zero_mode_policy == "positive":
        basis = np.column_stack([basis, _split_kernel(model, u[:, zero])])
    p = basis @ basis.conj().T
    state = QuasifreeState(p_op=p, conj=model.conj, model=model, gapped=not np.any(zero))
    state.validate()
    return state


def thermal_operator(model: OneParticleModel, beta: float) -> np.ndarray:
    """``exp(-beta h)`` evaluated in the cached eigenbasis; requires ``beta > 0``."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return model.function_of_h(lambda lam: np.exp(-beta * lam))


def lapse_profile(name: str, n_sites: int, amplitude: float = 0.2, width: float = 0.25) -> np.ndarray:
    """Named lapse profiles for config files.

    ``uniform`` is identically 1; ``bump`` is ``1 + amplitude * gaussian``
    centered mid-chain with standard deviation ``width * n_sites``.
    """
    if name == "uniform":
        return np.ones(n_sites)
    if name == "bump":
        x = np.arange(n_sites)
        center = (n_sites - 1) / 2.0
        sig = max(width * n_sites, 1e-9)
        return 1.0 + amplitude * np.exp(-0.5 * ((x - center) / sig) ** 2)
    raise GeometryError(f"unknown lapse profile {name!r}")


def validate_state_duality(p: np.ndarray, conj: ChargeConjugation, tol: float = HERM_TOL) -> None:
    """Raise :class:`StateError` unless ``C P C = 1 - P`` within ``tol``."""
    d = p.shape[0]
    defect = np.linalg.norm(conj.conjugate_operator(p) - (np.eye(d) - p), 2)
    if defect > tol * max(1.0, np.linalg.norm(p, 2)):
        raise StateError(f"C P C = 1 - P violated (defect {defect:.2e})")

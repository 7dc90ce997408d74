"""Explicit antisymmetric Fock representation on an occupation-number basis.

For ``M`` one-particle modes the Fock space has dimension ``2^M``; basis
index ``s`` encodes occupations in its bits (mode ``j`` occupied iff bit ``j``
is set).  Annihilators carry the standard alternating sign
``(-1)^(number of occupied modes below j)``, which reproduces the wedge-product
conventions of creation and annihilation operators.  Operators are kept
sparse; anything that needs an eigendecomposition is densified on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import ConsistencyError, ModeSpanError, SupportError, TooManyModesError
from .model import OneParticleModel, Region
from .states import QuasifreeState

MODE_CAP = 14
RANK_TOL = 1e-12
SPAN_TOL = 1e-10

Matrix = Union[np.ndarray, sp.spmatrix]


def _popcount_parity(bits: np.ndarray) -> np.ndarray:
    """(-1)^popcount as a float array."""
    return 1.0 - 2.0 * (np.bitwise_count(bits) & 1)


def _annihilator(j: int, n_modes: int) -> sp.csr_matrix:
    dim = 1 << n_modes
    bits = np.arange(dim, dtype=np.int64)
    occupied = (bits >> j) & 1 == 1
    cols = bits[occupied]
    rows = cols ^ (1 << j)
    below = cols & ((1 << j) - 1)
    signs = _popcount_parity(below)
    return sp.csr_matrix((signs.astype(complex), (rows, cols)), shape=(dim, dim))


@dataclass(eq=False)
class FockRep:
    """Concrete Fock representation generated by a quasifree state."""

    state: QuasifreeState
    modes: np.ndarray  # (dim_K, M), orthonormal columns spanning range(P^(1/2))
    a_ops: list  # annihilation matrices, sparse
    omega_vec: np.ndarray
    grading_diag: np.ndarray  # diagonal of the grading unitary U

    @property
    def n_modes(self) -> int:
        return self.modes.shape[1]

    @property
    def dim_fock(self) -> int:
        return 1 << self.n_modes

    @property
    def grading_u(self) -> sp.csr_matrix:
        """Unitary implementing the sign flip of all field operators."""
        return sp.diags(self.grading_diag).tocsr()

    @property
    def twist_v(self) -> sp.csr_matrix:
        """Twist unitary ``(1 + iU) / sqrt(2)``."""
        return sp.diags((1.0 + 1j * self.grading_diag) / np.sqrt(2.0)).tocsr()

    def annihilator(self, j: int) -> sp.csr_matrix:
        return self.a_ops[j]

    def creator(self, j: int) -> sp.csr_matrix:
        return self.a_ops[j].conj().T.tocsr()

    def mode_coefficients(self, vec: np.ndarray, label: str = "vector") -> np.ndarray:
        """Expand ``vec`` in the mode basis; error if it leaves the span."""
        coeff = self.modes.conj().T @ vec
        residual = np.linalg.norm(vec - self.modes @ coeff)
        if residual > SPAN_TOL * max(1.0, np.linalg.norm(vec)):
            raise ModeSpanError(f"{label} has component {residual:.3e} outside the mode span")
        return coeff


def build_fock(
    state: QuasifreeState,
    max_modes: int = MODE_CAP,
    modes: Optional[np.ndarray] = None,
) -> FockRep:
    """Build the Fock representation of a quasifree state.

    Parameters
    ----------
    state:
        Generating state; modes span the range of ``P^(1/2)``.
    max_modes:
        Memory guard; capped at 14 (Fock dimension 16384).
    modes:
        Optional explicit orthonormal basis of the range of ``P^(1/2)``
        (columns).  Defaults to the eigenvectors of ``P`` with nonzero
        eigenvalue, in descending eigenvalue order.
    """
    if max_modes > MODE_CAP:
        raise TooManyModesError(f"max_modes {max_modes} exceeds the cap {MODE_CAP}")
    if modes is None:
        w, v = np.linalg.eigh(state.p_op)
        keep = w > RANK_TOL
        idx = np.argsort(w[keep])[::-1]
        modes = v[:, keep][:, idx]
    else:
        modes = np.asarray(modes, dtype=complex)
        gram = modes.conj().T @ modes
        if np.linalg.norm(gram - np.eye(modes.shape[1])) > 1e-10:
            raise ValueError("explicit modes must be orthonormal columns")
        # modes must cover range(P^(1/2))
        proj_resid = state.sqrt_p - modes @ (modes.conj().T @ state.sqrt_p)
        if np.linalg.norm(proj_resid, 2) > SPAN_TOL:
            raise ModeSpanError("explicit modes do not span the range of P^(1/2)")
    m = modes.shape[1]
    if m > max_modes:
        raise TooManyModesError(f"state needs {m} modes, above the limit {max_modes}")
    dim = 1 << m
    omega = np.zeros(dim, dtype=complex)
    omega[0] = 1.0
    bits = np.arange(dim, dtype=np.int64)
    rep = FockRep(
        state=state,
        modes=np.ascontiguousarray(modes),
        a_ops=[_annihilator(j, m) for j in range(m)],
        omega_vec=omega,
        grading_diag=_popcount_parity(bits),
    )
    return rep


def creation_operator(rep: FockRep, p: np.ndarray) -> sp.csr_matrix:
    """``a(p)*`` for an arbitrary vector in the mode span (linear in ``p``)."""
    coeff = rep.mode_coefficients(np.asarray(p, dtype=complex), "creation argument")
    out = sp.csr_matrix((rep.dim_fock, rep.dim_fock), dtype=complex)
    for j, c in enumerate(coeff):
        if c != 0:
            out = out + c * rep.creator(j)
    return out


def annihilation_operator(rep: FockRep, p: np.ndarray) -> sp.csr_matrix:
    """``a(p)`` for an arbitrary vector in the mode span (antilinear in ``p``)."""
    coeff = rep.mode_coefficients(np.asarray(p, dtype=complex), "annihilation argument")
    out = sp.csr_matrix((rep.dim_fock, rep.dim_fock), dtype=complex)
    for j, c in enumerate(coeff):
        if c != 0:
            out = out + np.conj(c) * rep.annihilator(j)
    return out


def field_operator(rep: FockRep, k: np.ndarray) -> sp.csr_matrix:
    """Represented field ``a(P^(1/2) k)* + a(P^(1/2) C k)`` as a sparse matrix."""
    k = np.asarray(k, dtype=complex)
    state = rep.state
    p_plus = state.sqrt_p @ k
    p_minus = state.sqrt_p @ state.conj.apply(k)
    return creation_operator(rep, p_plus) + annihilation_operator(rep, p_minus)


def _ground_projector(model: OneParticleModel) -> np.ndarray:
    from .model import ZERO_MODE_TOL

    basis = model.eigenvectors[:, model.eigenvalues > ZERO_MODE_TOL]
    return basis @ basis.conj().T


def hamiltonian(rep: FockRep, model: OneParticleModel) -> np.ndarray:
    """Second quantization of ``P h P`` in the representation's modes.

    Requires the representation to be built from the ground state of
    ``model``; returns a dense positive-semidefinite matrix annihilating the
    vacuum vector.
    """
    if rep.state.dim != model.dim:
        raise ConsistencyError("representation and model have different one-particle dimensions")
    p_model = _ground_projector(model)
    if np.linalg.norm(rep.state.p_op - p_model, 2) > 1e-8:
        raise ConsistencyError("representation was not built from the ground state of this model")
    hp = rep.modes.conj().T @ model.h @ rep.modes
    hp = 0.5 * (hp + hp.conj().T)
    h_fock = sp.csr_matrix((rep.dim_fock, rep.dim_fock), dtype=complex)
    for j in range(rep.n_modes):
        adag_j = rep.creator(j)
        for l in range(rep.n_modes):
            if hp[j, l] != 0:
                h_fock = h_fock + hp[j, l] * (adag_j @ rep.annihilator(l))
    return h_fock.toarray()


@dataclass(eq=False)
class AlgebraElement:
    """Linear combination of ordered field-operator words.

    ``terms`` is a sequence of ``(coefficient, (k_1, ..., k_r))``; the empty
    word is the identity.  The Fock matrix is cached per representation.
    """

    terms: tuple
    support: Optional[Region] = None
    _cache: Optional[tuple] = field(default=None, repr=False)

    @classmethod
    def identity(cls, support: Optional[Region] = None) -> "AlgebraElement":
        return cls(terms=((1.0 + 0.0j, ()),), support=support)

    @classmethod
    def word(cls, ks: Sequence[np.ndarray], coeff: complex = 1.0,
             support: Optional[Region] = None) -> "AlgebraElement":
        return cls(terms=((complex(coeff), tuple(np.asarray(k) for k in ks)),), support=support)

    def check_support(self, region: Region) -> None:
        """Raise unless every field vector vanishes outside ``region``."""
        outside = 1.0 - region.e_c_diag
        for _, word in self.terms:
            for k in word:
                if np.linalg.norm(np.asarray(k) * outside) > 1e-12 * max(1.0, np.linalg.norm(k)):
                    raise SupportError("algebra element uses a vector supported outside the region")

    def to_matrix(self, rep: FockRep) -> np.ndarray:
        if self._cache is not None and self._cache[0] is rep:
            return self._cache[1]
        total = np.zeros((rep.dim_fock, rep.dim_fock), dtype=complex)
        eye = sp.identity(rep.dim_fock, dtype=complex, format="csr")
        for coeff, word in self.terms:
            prod = eye
            for k in word:
                prod = prod @ field_operator(rep, k)
            total += coeff * prod.toarray()
        self._cache = (rep, total)
        return total

    def operator_norm(self, rep: FockRep) -> float:
        return float(np.linalg.norm(self.to_matrix(rep), 2))


def _as_matrix(rep: FockRep, f) -> np.ndarray:
    if isinstance(f, AlgebraElement):
        return f.to_matrix(rep)
    if sp.issparse(f):
        return f.toarray()
    return np.asarray(f)


def theta_map(rep: FockRep, h_fock: np.ndarray, beta: float, a) -> np.ndarray:
    """Damped vacuum excitation ``exp(-beta H) A |Omega>``."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    vec = _as_matrix(rep, a) @ rep.omega_vec
    w, v = np.linalg.eigh(h_fock)
    return v @ (np.exp(-beta * w) * (v.conj().T @ vec))


def parity_parts(rep: FockRep, f) -> tuple:
    """Even/odd parts ``(F + UFU)/2`` and ``(F - UFU)/2``."""
    mat = _as_matrix(rep, f)
    u = rep.grading_diag
    ufu = u[:, None] * mat * u[None, :]
    return 0.5 * (mat + ufu), 0.5 * (mat - ufu)


def graded_commutator(rep: FockRep, f1, f2) -> np.ndarray:
    """Graded commutator: anticommutator on odd-odd parts, commutator otherwise."""
    f1_even, f1_odd = parity_parts(rep, f1)
    f2_even, f2_odd = parity_parts(rep, f2)

    def comm(a, b):
        return a @ b - b @ a

    result = comm(f1_even, f2_even) + comm(f1_even, f2_odd) + comm(f1_odd, f2_even)
    result += f1_odd @ f2_odd + f2_odd @ f1_odd
    return result


def vacuum_expectation(rep: FockRep, f) -> complex:
    mat = _as_matrix(rep, f)
    return complex(np.vdot(rep.omega_vec, mat @ rep.omega_vec))


def vacuum_n_point(rep: FockRep, ks: Iterable[np.ndarray]) -> complex:
    """Brute-force vacuum expectation of a product of field operators."""
    vec = rep.omega_vec
    for k in reversed(list(ks)):
        vec = field_operator(rep, k) @ vec
    return complex(np.vdot(rep.omega_vec, vec))

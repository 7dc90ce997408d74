"""Quasifree states as one-particle operators.

A bounded operator ``P`` with ``0 <= P <= 1`` and ``C P C = 1 - P`` fixes a
quasifree state through its two-point function ``(C k1 | P k2)``; all higher
correlations are signed sums over pair partitions, evaluated here as the
Pfaffian of the antisymmetric matrix of two-point values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import PerturbationError, StateError, SupportError
from .model import ChargeConjugation, OneParticleModel, Region

POSITIVITY_TOL = 1e-12
PURITY_TOL = 1e-10


@dataclass(eq=False)
class QuasifreeState:
    """One-particle operator of a quasifree state.

    Attributes
    ----------
    p_op:
        Hermitian matrix with spectrum in [0, 1] and ``C P C = 1 - P``.
    conj:
        The model's charge conjugation.
    model:
        Optional back-reference to the generating model (needed by
        constructions that use the Hamiltonian's eigenbasis).
    gapped:
        False when the state was produced with an explicit zero-mode policy.
    """

    p_op: np.ndarray
    conj: ChargeConjugation
    model: Optional[OneParticleModel] = None
    gapped: bool = True
    _sqrt_p: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.p_op = np.asarray(self.p_op)
        self.p_op.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.p_op.shape[0]

    @property
    def sqrt_p(self) -> np.ndarray:
        """``P^(1/2)``, cached.

        Eigenvalues below the positivity tolerance are treated as exact zeros
        so that roundoff in nominally-zero directions does not leak
        ``sqrt(eps)``-sized components into the range.
        """
        if self._sqrt_p is None:
            w, v = np.linalg.eigh(self.p_op)
            w = np.where(w > POSITIVITY_TOL, w, 0.0)
            self._sqrt_p = (v * np.sqrt(w)) @ v.conj().T
            self._sqrt_p.setflags(write=False)
        return self._sqrt_p

    @property
    def is_pure(self) -> bool:
        return bool(np.linalg.norm(self.p_op @ self.p_op - self.p_op, 2) <= PURITY_TOL)

    def validate(self) -> None:
        """Check Hermiticity, spectrum in [0, 1] and conjugation duality."""
        p = self.p_op
        if np.linalg.norm(p - p.conj().T, 2) > POSITIVITY_TOL * max(1.0, np.linalg.norm(p, 2)):
            raise StateError("P is not Hermitian")
        w = np.linalg.eigvalsh(0.5 * (p + p.conj().T))
        if w.min() < -POSITIVITY_TOL or w.max() > 1 + POSITIVITY_TOL:
            raise StateError(f"spectrum of P leaves [0, 1]: [{w.min():.3e}, {w.max():.3e}]")
        d = p.shape[0]
        defect = np.linalg.norm(self.conj.conjugate_operator(p) - (np.eye(d) - p), 2)
        if defect > POSITIVITY_TOL * max(1.0, d):
            raise StateError(f"C P C = 1 - P violated (defect {defect:.2e})")


def thermal_state(model: OneParticleModel, beta: float) -> QuasifreeState:
    """Strictly mixed state with occupation ``1 / (1 + exp(-beta lambda))``.

    Satisfies the conjugation duality exactly and tends to the ground state
    as ``beta -> infinity``.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    p = model.function_of_h(lambda lam: 1.0 / (1.0 + np.exp(-beta * lam)))
    state = QuasifreeState(p_op=p, conj=model.conj, model=model)
    state.validate()
    return state


@dataclass(frozen=True)
class TestVectorSet:
    """Input vectors for n-point evaluations, optionally tagged with supports."""

    __test__ = False  # not a pytest class, despite the name

    vectors: tuple
    regions: Optional[tuple] = None

    def __post_init__(self):
        vectors = tuple(np.asarray(v) for v in self.vectors)
        object.__setattr__(self, "vectors", vectors)
        if self.regions is not None:
            regions = tuple(self.regions)
            if len(regions) != len(vectors):
                raise SupportError("one region tag per vector required")
            for v, reg in zip(vectors, regions):
                if reg is None:
                    continue
                outside = v * (1.0 - reg.e_c_diag)
                if np.linalg.norm(outside) > 1e-12 * max(1.0, np.linalg.norm(v)):
                    raise SupportError("support-tagged vector does not vanish outside its region")
            object.__setattr__(self, "regions", regions)

    def __len__(self) -> int:
        return len(self.vectors)


def two_point(state: QuasifreeState, k1: np.ndarray, k2: np.ndarray) -> complex:
    """Two-point value ``(C k1 | P k2)``."""
    k1 = np.asarray(k1)
    k2 = np.asarray(k2)
    if k1.shape != (state.dim,) or k2.shape != (state.dim,):
        raise ValueError(f"vectors must have shape ({state.dim},)")
    return complex(np.vdot(state.conj.apply(k1), state.p_op @ k2))


def pfaffian(a: np.ndarray) -> complex:
    """Pfaffian of an antisymmetric matrix by first-row expansion.

    Exact combinatorial expansion with memoization over index subsets;
    intended for the small orders (n <= 12) used in correlation functions.
    """
    a = np.asarray(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("pfaffian requires a square matrix")
    if n % 2:
        return 0.0 + 0.0j
    if n == 0:
        return 1.0 + 0.0j
    cache: dict = {}

    def rec(active: tuple) -> complex:
        if not active:
            return 1.0 + 0.0j
        val = cache.get(active)
        if val is not None:
            return val
        i = active[0]
        rest = active[1:]
        total = 0.0 + 0.0j
        for pos, j in enumerate(rest):
            sub = rest[:pos] + rest[pos + 1:]
            sign = -1.0 if pos % 2 else 1.0
            total += sign * a[i, j] * rec(sub)
        cache[active] = total
        return total

    return complex(rec(tuple(range(n))))


def n_point(state: QuasifreeState, ks) -> complex:
    """n-point function as the Pfaffian over pair partitions.

    Odd orders vanish; even orders equal ``Pf(A)`` with
    ``A[i, j] = two_point(k_i, k_j)`` for ``i < j``.
    """
    vectors = ks.vectors if isinstance(ks, TestVectorSet) else tuple(np.asarray(k) for k in ks)
    n = len(vectors)
    if n % 2:
        return 0.0 + 0.0j
    if n == 0:
        return 1.0 + 0.0j
    a = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            w = two_point(state, vectors[i], vectors[j])
            a[i, j] = w
            a[j, i] = -w
    return pfaffian(a)


@dataclass(frozen=True)
class RestrictedState:
    """Compression ``E_C P E_C`` of a state to a region.

    Positivity ``0 <= E P E <= 1`` survives the compression but the
    conjugation duality only holds on the region's subspace, so this is kept
    as an operator pair rather than a full :class:`QuasifreeState`.
    """

    p_compressed: np.ndarray
    region: Region

    @property
    def e_c_diag(self) -> np.ndarray:
        return self.region.e_c_diag


def restrict(state: QuasifreeState, region: Region) -> RestrictedState:
    """Compress the one-particle operator to a region."""
    e = region.e_c_diag
    p_comp = e[:, None] * state.p_op * e[None, :]
    return RestrictedState(p_compressed=p_comp, region=region)


def smooth_perturbation(
    state: QuasifreeState,
    rank: int,
    decay: float,
    scale: float = 0.1,
    rng: Optional[np.random.Generator] = None,
) -> QuasifreeState:
    """Finite-rank smooth perturbation of a quasifree state.

    Builds a Hermitian ``Delta`` of rank at most ``rank`` from the
    lowest-``|lambda|`` eigenvectors of the model Hamiltonian, with
    coefficients damped by ``exp(-decay |lambda|)``, antisymmetrized under
    conjugation (``Delta -> (Delta - C Delta C) / 2``) so that
    ``C P' C = 1 - P'`` holds exactly, and clipped back into ``[0, 1]``.

    Without ``rng`` the coefficients are deterministic and act diagonally on
    each conjugation pair (occupied modes are depleted, their partners
    populated); with ``rng`` a random Hermitian mixing within the low-energy
    conjugation-closed subspace is used instead.

    Raises
    ------
    PerturbationError
        If clipping changes the perturbation by more than 50% in norm.
    """
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    if decay <= 0:
        raise ValueError(f"decay must be positive, got {decay}")
    model = state.model
    if model is None:
        raise StateError("smooth_perturbation needs a state carrying its model")

    lam = model.eigenvalues
    u = model.eigenvectors
    pos_idx = np.where(lam > 0)[0]
    order = pos_idx[np.argsort(lam[pos_idx])]
    n_pairs = max(1, rank // 2)
    chosen = order[:n_pairs]

    if rng is None:
        delta0 = np.zeros_like(state.p_op)
        for j in chosen:
            c = scale * np.exp(-decay * abs(lam[j]))
            vec = u[:, j]
            delta0 -= c * np.outer(vec, vec.conj())
    else:
        cols = []
        weights = []
        for j in chosen:
            w = np.sqrt(scale * np.exp(-decay * abs(lam[j])))
            vec = u[:, j]
            cols.extend([vec, state.conj.apply(vec)])
            weights.extend([w, w])
        basis = np.column_stack(cols)
        wts = np.asarray(weights)
        r = basis.shape[1]
        g = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
        g = 0.5 * (g + g.conj().T)
        g = wts[:, None] * g * wts[None, :]
        delta0 = basis @ g @ basis.conj().T

    delta = 0.5 * (delta0 - state.conj.conjugate_operator(delta0))
    x = state.p_op + delta
    w, v = np.linalg.eigh(x)
    p_new = (v * np.clip(w, 0.0, 1.0)) @ v.conj().T
    clip_change = np.linalg.norm(p_new - x, 2)
    delta_norm = np.linalg.norm(delta, 2)
    if delta_norm > 0 and clip_change > 0.5 * delta_norm:
        raise PerturbationError(
            f"clipping changed the perturbation by {clip_change:.3e} "
            f"(more than 50% of ||Delta|| = {delta_norm:.3e})"
        )
    out = QuasifreeState(p_op=p_new, conj=state.conj, model=model, gapped=state.gapped)
    out.validate()
    return out

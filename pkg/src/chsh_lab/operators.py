"""CHSH operator constructions on one pair and on four independent pairs.

The single-pair Bell operator mixes non-commuting correlation observables.
Its eigenspaces are checked for product (Schmidt rank one) vectors by
reshaping kets into 2x2 amplitude matrices and testing the determinant.

The four-pair space is the tensor product of four singlet spaces. Operators
on it are kept in factored form (one 4x4 factor per occupied slot) and can be
materialized as dense 256x256 matrices for cross-checks.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .eprb import Direction, correlation_observable, embed_left, embed_right, singlet, spin_observable
from .linalg import (
    IMAG_ATOL,
    DimensionError,
    as_matrix,
    commutator,
    expectation,
    group_eigenvalues,
    hermitian_eigensystem,
    kron,
    kron_all,
    max_norm,
    require_hermitian,
)

CHSH_SIGNS = (1, -1, 1, 1)
PRODUCT_DET_ATOL = 1e-9
WITNESS_RESIDUAL_ATOL = 1e-8
EIGEN_GROUP_ATOL = 1e-9
N_SETS = 4
PAIR_DIM = 4
MAX_DENSE_DIM = PAIR_DIM**N_SETS

STANDARD_PLANAR_DEG = (0.0, 90.0, 45.0, 135.0)


@dataclass(frozen=True)
class AngleConfig:
    """Measurement directions (a, a', b, b') of the CHSH combination."""

    a: Direction
    a_prime: Direction
    b: Direction
    b_prime: Direction

    @classmethod
    def planar(cls, a: float, a_prime: float, b: float, b_prime: float) -> "AngleConfig":
        """Directions in the x-z plane, angles in degrees measured from z."""
        return cls(*(Direction.from_angles(t) for t in (a, a_prime, b, b_prime)))

    @classmethod
    def spherical(cls, angles: Sequence[tuple[float, float]]) -> "AngleConfig":
        if len(angles) != 4:
            raise ValueError(f"need four (theta, phi) pairs, got {len(angles)}")
        return cls(*(Direction.from_angles(t, p) for t, p in angles))

    @classmethod
    def standard(cls) -> "AngleConfig":
        return cls.planar(*STANDARD_PLANAR_DEG)

    def directions(self) -> tuple[Direction, Direction, Direction, Direction]:
        return (self.a, self.a_prime, self.b, self.b_prime)

    def terms(self) -> tuple[tuple[int, Direction, Direction], ...]:
        """(sign, left, right) for c(a,b) - c(a,b') + c(a',b) + c(a',b')."""
        pairs = ((self.a, self.b), (self.a, self.b_prime), (self.a_prime, self.b), (self.a_prime, self.b_prime))
        return tuple((s, u, v) for s, (u, v) in zip(CHSH_SIGNS, pairs))


def chsh_dot_value(cfg: AngleConfig) -> float:
    """|a.b - a.b' + a'.b + a'.b'|, the closed form used as an oracle."""
    return abs(sum(s * u.dot(v) for s, u, v in cfg.terms()))


def correlation_terms(cfg: AngleConfig) -> list[np.ndarray]:
    return [correlation_observable(u, v) for _, u, v in cfg.terms()]


def bell_operator_strong(cfg: AngleConfig) -> np.ndarray:
    """Signed sum of the four correlation observables on a single pair."""
    out = np.zeros((4, 4), dtype=complex)
    for (s, _, _), obs in zip(cfg.terms(), correlation_terms(cfg)):
        out += s * obs
    return out


def pairwise_commutators(cfg: AngleConfig) -> list[float]:
    """Max-norms of [O_i, O_j] for i < j, in order (12, 13, 14, 23, 24, 34)."""
    ops = correlation_terms(cfg)
    return [max_norm(commutator(ops[i], ops[j])) for i in range(4) for j in range(i + 1, 4)]


def s_strong_quantum(cfg: AngleConfig) -> float:
    """|<psi| B |psi>| for the single-pair Bell operator."""
    return abs(expectation(singlet(), bell_operator_strong(cfg)))


# -- product eigenvector analysis -------------------------------------------


@dataclass(frozen=True)
class FactorabilityVerdict:
    eigenvalue: float
    eigenspace_dim: int
    has_product_vector: bool
    witness: Optional[tuple[np.ndarray, np.ndarray]]
    residual: float
    # |det W| of the eigenvector for 1-dim eigenspaces, of the witness otherwise
    det_magnitude: float
    note: str = ""

    def witness_ket(self) -> Optional[np.ndarray]:
        if self.witness is None:
            return None
        return kron(*self.witness)


def amplitude_matrix(ket) -> np.ndarray:
    """Reshape a 4-dim ket into W[left, right]."""
    v = np.asarray(ket, dtype=complex)
    if v.shape != (4,):
        raise DimensionError(f"expected a 4-dim ket, got shape {v.shape}")
    return v.reshape(2, 2)


def _det2(w: np.ndarray) -> complex:
    return w[0, 0] * w[1, 1] - w[0, 1] * w[1, 0]


def _factor_rank_one(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u, _, vh = np.linalg.svd(w)
    left = u[:, 0]
    right = vh[0, :]
    return left / np.linalg.norm(left), right / np.linalg.norm(right)


def _det_root_combination(w1: np.ndarray, w2: np.ndarray) -> Optional[np.ndarray]:
    """A rank-one member of span{W1, W2}, or None if the pencil has none.

    det(W1 + t W2) = det W1 + t * cross + t^2 * det W2. A vanishing leading
    coefficient means W2 itself is rank one (the root at t = infinity).
    """
    c2 = _det2(w2)
    c1 = w1[0, 0] * w2[1, 1] + w1[1, 1] * w2[0, 0] - w1[0, 1] * w2[1, 0] - w1[1, 0] * w2[0, 1]
    c0 = _det2(w1)
    if abs(c0) <= PRODUCT_DET_ATOL:
        return w1
    if abs(c2) <= PRODUCT_DET_ATOL:
        return w2
    roots = np.roots([c2, c1, c0])
    if roots.size == 0:
        return None
    roots = sorted(roots, key=lambda r: (abs(r), r.real, r.imag))
    return w1 + roots[0] * w2


def _witness_from(w: np.ndarray, projector: np.ndarray) -> tuple[tuple[np.ndarray, np.ndarray], float, float]:
    left, right = _factor_rank_one(w)
    ket = kron(left, right)
    residual = float(np.linalg.norm(ket - projector @ ket))
    return (left, right), residual, float(abs(_det2(amplitude_matrix(ket))))


def product_eigenvector_analysis(h) -> list[FactorabilityVerdict]:
    """Decide, per eigenspace of a Hermitian 4x4 operator, whether it holds a product vector."""
    op = require_hermitian(h)
    if op.shape != (4, 4):
        raise DimensionError(f"analysis needs a 4x4 operator, got {op.shape}")
    evals, vecs = hermitian_eigensystem(op)
    verdicts = []
    for group in group_eigenvalues(evals, EIGEN_GROUP_ATOL):
        basis = np.column_stack([vecs[k] for k in group])
        projector = basis @ basis.conj().T
        lam = float(np.mean(evals[group]))
        dim = len(group)
        if dim == 1:
            w = amplitude_matrix(basis[:, 0])
            det_mag = float(abs(_det2(w)))
            if det_mag > PRODUCT_DET_ATOL:
                verdicts.append(FactorabilityVerdict(lam, 1, False, None, math.inf, det_mag, "entangled eigenvector"))
                continue
            witness, residual, _ = _witness_from(w, projector)
            verdicts.append(FactorabilityVerdict(lam, 1, residual <= WITNESS_RESIDUAL_ATOL, witness, residual, det_mag, "product eigenvector"))
            continue
        w1 = amplitude_matrix(basis[:, 0])
        w2 = amplitude_matrix(basis[:, 1])
        combo = _det_root_combination(w1, w2)
        note = "determinant root in 2-dim subspace" + ("" if dim == 2 else f" of {dim}-dim eigenspace")
        if combo is None:
            # only reachable if the determinant pencil is a nonzero constant
            verdicts.append(FactorabilityVerdict(lam, dim, False, None, math.inf, float(abs(_det2(w1))), "determinant pencil is a nonzero constant"))
            continue
        witness, residual, det_mag = _witness_from(combo, projector)
        ok = residual <= WITNESS_RESIDUAL_ATOL and det_mag <= PRODUCT_DET_ATOL
        verdicts.append(FactorabilityVerdict(lam, dim, ok, witness if ok else None, residual, det_mag, note))
    return verdicts


# -- four-pair product space ------------------------------------------------


@dataclass(frozen=True, eq=False)
class FourPairState:
    ket: np.ndarray
    factors: tuple[np.ndarray, ...]


@functools.lru_cache(maxsize=None)
def four_pair_state() -> FourPairState:
    """Tensor product of four singlets, dim 256."""
    factors = tuple(singlet() for _ in range(N_SETS))
    for f in factors:
        f.setflags(write=False)
    ket = kron_all(*factors)
    ket.setflags(write=False)
    return FourPairState(ket=ket, factors=factors)


def _check_slot(set_index: int) -> int:
    if not isinstance(set_index, (int, np.integer)) or not 1 <= set_index <= N_SETS:
        raise IndexError(f"set index must be in 1..{N_SETS}, got {set_index!r}")
    return int(set_index)


@dataclass(frozen=True, eq=False)
class PairObservable:
    """Tensor-product operator on the four-pair space.

    ``slots`` maps a set index (1..4) to the 4x4 operator acting on that pair;
    unlisted slots carry the identity.
    """

    slots: dict[int, np.ndarray] = field(default_factory=dict)

    def __matmul__(self, other: "PairObservable") -> "PairObservable":
        merged = dict(self.slots)
        for k, op in other.slots.items():
            merged[k] = merged[k] @ op if k in merged else op
        return PairObservable(merged)

    def slot_operator(self, k: int) -> np.ndarray:
        return self.slots.get(k, np.eye(PAIR_DIM, dtype=complex))

    def dense(self) -> np.ndarray:
        return kron_all(*(self.slot_operator(k) for k in range(1, N_SETS + 1)))

    def expectation(self, state: Optional[FourPairState] = None, strategy: str = "factored") -> float:
        state = four_pair_state() if state is None else state
        if strategy == "dense":
            return expectation(state.ket, self.dense())
        if strategy != "factored":
            raise ValueError(f"unknown strategy {strategy!r}")
        value = complex(1.0)
        for k, op in sorted(self.slots.items()):
            psi = state.factors[k - 1]
            value *= np.vdot(psi, op @ psi)
        if abs(value.imag) > IMAG_ATOL:
            raise ArithmeticError(f"expectation has imaginary residue {value.imag:.3e}")
        return float(value.real)


def embed_pair_observable(set_index: int, obs4) -> PairObservable:
    k = _check_slot(set_index)
    op = as_matrix(obs4)
    if op.shape != (PAIR_DIM, PAIR_DIM):
        raise DimensionError(f"pair observable must be 4x4, got {op.shape}")
    return PairObservable({k: op})


def generalized_correlation_Ekl(k: int, l: int, u: Direction, v: Direction, strategy: str = "factored") -> float:
    """<psi_1234| (sigma_{k,L}.u)(sigma_{l,R}.v) |psi_1234>."""
    left = embed_pair_observable(k, embed_left(spin_observable(u)))
    right = embed_pair_observable(l, embed_right(spin_observable(v)))
    return (left @ right).expectation(strategy=strategy)


def s_weak_quantum(cfg: AngleConfig, strategy: str = "factored") -> float:
    """|E_11(a,b) - E_22(a,b') + E_33(a',b) + E_44(a',b')| on the four-pair state."""
    total = 0.0
    for k, (s, u, v) in enumerate(cfg.terms(), start=1):
        total += s * generalized_correlation_Ekl(k, k, u, v, strategy=strategy)
    return abs(total)


def s_weak_observable(cfg: AngleConfig) -> np.ndarray:
    """Dense 256x256 weak-objective CHSH observable (for cross-validation)."""
    out = np.zeros((MAX_DENSE_DIM, MAX_DENSE_DIM), dtype=complex)
    for k, (s, u, v) in enumerate(cfg.terms(), start=1):
        out += s * embed_pair_observable(k, correlation_observable(u, v)).dense()
    return out

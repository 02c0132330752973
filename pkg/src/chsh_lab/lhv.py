"""Finite-N local hidden-variable ensembles and CHSH estimators.

Hidden states are unit 3-vectors, stored row-wise in an ``(N, 3)`` array.
Outcome functions are vectorized over those rows and return ``int8`` arrays
of +1/-1. All sums run in integer arithmetic and are divided by N once, so
the per-pair identities hold exactly.

Randomness comes from Philox, a counter-based generator. Each chunk of
``CHUNK_SIZE`` states has its own stream keyed by (seed, chunk index), so
threaded and serial generation give the same bits.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .eprb import Direction
from .operators import AngleConfig

CHUNK_SIZE = 1 << 16
SEED_MASK = (1 << 64) - 1
STRONG_TERMS = (-2, 2)
WEAK_TERMS = (-4, -2, 0, 2, 4)
DOF_STRONG = "Nf"
DOF_WEAK = "4Nf"

Sampler = Callable[[np.random.Generator, int, int], np.ndarray]
Outcome = Callable[[Direction, np.ndarray], np.ndarray]


class InvariantViolation(RuntimeError):
    """An identity that must hold exactly was broken."""


class NoCounterfactualError(ValueError):
    """The model has no single distribution for all four terms."""


def check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise TypeError(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) <= SEED_MASK:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return int(seed)


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed for a tuple of integer keys."""
    ss = np.random.SeedSequence([check_seed(seed), *(int(k) for k in keys)])
    return int(ss.generate_state(1, np.uint64)[0])


def stream(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([check_seed(seed), *(int(k) for k in keys)])))


# -- models -----------------------------------------------------------------


def _sign(x: np.ndarray) -> np.ndarray:
    # sign(0) := +1 keeps outcomes in {-1, +1}
    return np.where(x >= 0.0, 1, -1).astype(np.int8)


def sample_sphere(rng: np.random.Generator, n: int, set_index: int = 1) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True)
class LhvModel:
    """Distribution of hidden states plus deterministic left/right outcome functions.

    ``per_set`` models draw each of the four weak-objective sets from its own
    distribution; they have no common ensemble, so strong-objective
    (counterfactual) evaluation is refused.
    """

    name: str
    sample: Sampler
    outcome_left: Outcome
    outcome_right: Outcome
    per_set: bool = False

    @property
    def counterfactual(self) -> bool:
        return not self.per_set


def _sphere_left(u: Direction, lam: np.ndarray) -> np.ndarray:
    return _sign(lam @ u.as_array())


def _sphere_right(v: Direction, lam: np.ndarray) -> np.ndarray:
    return -_sign(lam @ v.as_array())


def _const(value: int) -> Outcome:
    def outcome(u: Direction, lam: np.ndarray) -> np.ndarray:
        return np.full(lam.shape[0], value, dtype=np.int8)

    return outcome


SQRT_HALF = 1.0 / math.sqrt(2.0)
# One point mass per set; lambda_x carries the left outcome, lambda_y the right.
# Products per set are (+1, -1, +1, +1), matching the CHSH signs, so every term adds +1.
_ADVERSARIAL_POINTS = {
    1: (SQRT_HALF, SQRT_HALF, 0.0),
    2: (SQRT_HALF, -SQRT_HALF, 0.0),
    3: (SQRT_HALF, SQRT_HALF, 0.0),
    4: (SQRT_HALF, SQRT_HALF, 0.0),
}


def _adversarial_sample(rng: np.random.Generator, n: int, set_index: int = 1) -> np.ndarray:
    try:
        point = _ADVERSARIAL_POINTS[set_index]
    except KeyError:
        raise ValueError(f"adversarial-per-set model needs set index 1..4, got {set_index}") from None
    return np.tile(np.array(point), (n, 1))


SPHERE_SIGN = LhvModel("sphere-sign", sample_sphere, _sphere_left, _sphere_right)
CONSTANT = LhvModel("constant", sample_sphere, _const(1), _const(-1))
ADVERSARIAL_PER_SET = LhvModel(
    "adversarial-per-set",
    _adversarial_sample,
    lambda u, lam: _sign(lam[:, 0]),
    lambda v, lam: _sign(lam[:, 1]),
    per_set=True,
)


def builtin_models() -> tuple[LhvModel, ...]:
    return (SPHERE_SIGN, CONSTANT, ADVERSARIAL_PER_SET)


def get_model(name: str) -> LhvModel:
    for m in builtin_models():
        if m.name == name:
            return m
    raise KeyError(f"unknown model {name!r}; choose from {[m.name for m in builtin_models()]}")


def sphere_sign_correlation(theta: float) -> float:
    """Large-N mean correlation of the sphere-sign model at relative angle ``theta`` (radians)."""
    return -1.0 + 2.0 * theta / math.pi


# -- ensembles --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Ensemble:
    states: np.ndarray
    seed: int
    model_name: str
    set_index: int = 1

    def __len__(self) -> int:
        return self.states.shape[0]


def sample_ensemble(model: LhvModel, n: int, seed: int, *, set_index: int = 1, workers: int = 1) -> Ensemble:
    """Draw ``n`` hidden states. Output depends only on (model, n, seed, set_index)."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"ensemble size must be a positive integer, got {n!r}")
    seed = check_seed(seed)
    n_chunks = -(-n // CHUNK_SIZE)

    def chunk(c: int) -> np.ndarray:
        m = min(CHUNK_SIZE, n - c * CHUNK_SIZE)
        return model.sample(stream(seed, c), m, set_index)

    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(chunk, range(n_chunks)))
    else:
        parts = [chunk(c) for c in range(n_chunks)]
    states = np.concatenate(parts, axis=0)
    states.setflags(write=False)
    return Ensemble(states=states, seed=seed, model_name=model.name, set_index=set_index)


def weak_ensembles(model: LhvModel, n: int, seed: int, *, workers: int = 1) -> tuple[Ensemble, ...]:
    """Four independent ensembles, one per CHSH term, with seeds derived from ``seed``."""
    return tuple(
        sample_ensemble(model, n, derive_seed(seed, j), set_index=j, workers=workers) for j in range(1, 5)
    )


# -- estimators -------------------------------------------------------------


@dataclass(frozen=True)
class ChshEstimate:
    value: float
    per_term_histogram: Mapping[int, int]
    n_pairs: int
    dof_note: str
    signed_sum: int


def _outcomes(fn: Outcome, d: Direction, lam: np.ndarray) -> np.ndarray:
    out = np.asarray(fn(d, lam))
    if out.shape != (lam.shape[0],) or not np.all((out == 1) | (out == -1)):
        raise InvariantViolation("outcome function returned values outside {-1, +1}")
    return out.astype(np.int64)


def _check_ensemble(ens: Ensemble, model: LhvModel) -> None:
    if ens.model_name != model.name:
        raise ValueError(f"ensemble was drawn for model {ens.model_name!r}, not {model.name!r}")


def _histogram(terms: np.ndarray, support: Sequence[int]) -> dict[int, int]:
    values, counts = np.unique(terms, return_counts=True)
    hist = {int(s): 0 for s in support}
    for v, c in zip(values, counts):
        if int(v) not in hist:
            raise InvariantViolation(f"per-term value {int(v)} outside admissible set {tuple(support)}")
        hist[int(v)] = int(c)
    return hist


def mean_correlation_M(ens: Ensemble, model: LhvModel, u: Direction, v: Direction) -> float:
    """(1/N) sum_i A(u, lambda_i) B(v, lambda_i)."""
    _check_ensemble(ens, model)
    total = int(np.sum(_outcomes(model.outcome_left, u, ens.states) * _outcomes(model.outcome_right, v, ens.states)))
    return total / len(ens)


def strong_terms(ens: Ensemble, model: LhvModel, cfg: AngleConfig) -> np.ndarray:
    """Per-pair factored terms A(a)[B(b) - B(b')] + A(a')[B(b) + B(b')] on one ensemble."""
    if not model.counterfactual:
        raise NoCounterfactualError(f"model {model.name!r} has no single ensemble for counterfactual evaluation")
    _check_ensemble(ens, model)
    lam = ens.states
    aa = _outcomes(model.outcome_left, cfg.a, lam)
    aap = _outcomes(model.outcome_left, cfg.a_prime, lam)
    bb = _outcomes(model.outcome_right, cfg.b, lam)
    bbp = _outcomes(model.outcome_right, cfg.b_prime, lam)
    factored = aa * (bb - bbp) + aap * (bb + bbp)
    expanded = aa * bb - aa * bbp + aap * bb + aap * bbp
    if not np.array_equal(factored, expanded):
        raise InvariantViolation("factored and expanded strong terms disagree")
    return factored


def s_strong(ens: Ensemble, model: LhvModel, cfg: AngleConfig) -> ChshEstimate:
    """All four products evaluated on the same hidden states."""
    terms = strong_terms(ens, model, cfg)
    n = terms.size
    hist = _histogram(terms, STRONG_TERMS)
    total = int(terms.sum())
    if abs(total) > 2 * n:
        raise InvariantViolation(f"|sum| = {abs(total)} exceeds 2N = {2 * n}")
    return ChshEstimate(abs(total) / n, hist, n, DOF_STRONG, total)


def weak_terms(ensembles: Sequence[Ensemble], models: Union[LhvModel, Sequence[LhvModel]], cfg: AngleConfig) -> np.ndarray:
    if len(ensembles) != 4:
        raise ValueError(f"weak-objective CHSH needs four ensembles, got {len(ensembles)}")
    sizes = {len(e) for e in ensembles}
    if len(sizes) != 1:
        raise ValueError(f"ensembles must have equal length, got {sorted(sizes)}")
    if isinstance(models, LhvModel):
        models = (models,) * 4
    if len(models) != 4:
        raise ValueError("need one model or four models")
    total = np.zeros(len(ensembles[0]), dtype=np.int64)
    for ens, model, (s, u, v) in zip(ensembles, models, cfg.terms()):
        _check_ensemble(ens, model)
        total += s * _outcomes(model.outcome_left, u, ens.states) * _outcomes(model.outcome_right, v, ens.states)
    return total


def s_weak_lhv(ensembles: Sequence[Ensemble], models: Union[LhvModel, Sequence[LhvModel]], cfg: AngleConfig) -> ChshEstimate:
    """M_11(a,b) - M_22(a,b') + M_33(a',b) + M_44(a',b'), each M on its own ensemble."""
    terms = weak_terms(ensembles, models, cfg)
    n = terms.size
    hist = _histogram(terms, WEAK_TERMS)
    total = int(terms.sum())
    if abs(total) > 4 * n:
        raise InvariantViolation(f"|sum| = {abs(total)} exceeds 4N = {4 * n}")
    return ChshEstimate(abs(total) / n, hist, n, DOF_WEAK, total)


# -- concentration sweep ----------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    n: int
    mean_s_weak: float
    max_s_weak: float
    stddev: float


def _rep_value(model: LhvModel, cfg: AngleConfig, n: int, seed: int) -> float:
    return s_weak_lhv(weak_ensembles(model, n, seed), model, cfg).value


def convergence_sweep(
    model: LhvModel,
    cfg: AngleConfig,
    n_values: Sequence[int],
    reps: int,
    seed: int,
    *,
    workers: int = 1,
) -> list[SweepRow]:
    """Spread of the weak-objective estimate over ``reps`` independent repetitions per N.

    Repetition r at size N uses seed ``derive_seed(seed, N, r)``; rows come back sorted by N.
    """
    if not n_values:
        raise ValueError("n_values must not be empty")
    if reps < 2:
        raise ValueError(f"reps must be >= 2, got {reps}")
    seed = check_seed(seed)
    rows = []
    for n in sorted({int(x) for x in n_values}):
        if n < 1:
            raise ValueError(f"ensemble size must be positive, got {n}")
        seeds = [derive_seed(seed, n, r) for r in range(reps)]
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                values = list(pool.map(lambda s: _rep_value(model, cfg, n, s), seeds))
        else:
            values = [_rep_value(model, cfg, n, s) for s in seeds]
        arr = np.array(values)
        rows.append(SweepRow(n, float(arr.mean()), float(arr.max()), float(arr.std(ddof=1))))
    return rows

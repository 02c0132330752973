import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chsh_lab import eprb, lhv
from chsh_lab.eprb import Direction
from chsh_lab.lhv import ADVERSARIAL_PER_SET, CONSTANT, SPHERE_SIGN
from chsh_lab.operators import AngleConfig

seeds = st.integers(min_value=0, max_value=2**64 - 1)


def _random_config(seed):
    rng = np.random.default_rng(seed % 2**32)
    return AngleConfig(*(eprb.random_direction(rng) for _ in range(4)))


def _solid_angle_M(theta):
    # fraction of the sphere where sign(u.l) != sign(v.l) is theta/pi; product A*B = -sign*sign
    discord = theta / math.pi
    return -(1 - discord) + discord


def test_determinism():
    a = lhv.sample_ensemble(SPHERE_SIGN, 1000, 7)
    b = lhv.sample_ensemble(SPHERE_SIGN, 1000, 7)
    assert np.array_equal(a.states, b.states)
    assert not np.array_equal(a.states, lhv.sample_ensemble(SPHERE_SIGN, 1000, 8).states)


def test_chunked_generation_is_worker_independent():
    n = 3 * lhv.CHUNK_SIZE + 17
    serial = lhv.sample_ensemble(SPHERE_SIGN, n, 99, workers=1)
    threaded = lhv.sample_ensemble(SPHERE_SIGN, n, 99, workers=4)
    assert np.array_equal(serial.states, threaded.states)
    # prefix property: the first chunk depends only on (seed, chunk 0)
    short = lhv.sample_ensemble(SPHERE_SIGN, lhv.CHUNK_SIZE, 99)
    assert np.array_equal(short.states, serial.states[: lhv.CHUNK_SIZE])


def test_sample_ensemble_errors():
    with pytest.raises(ValueError):
        lhv.sample_ensemble(SPHERE_SIGN, 0, 1)
    with pytest.raises(ValueError):
        lhv.sample_ensemble(SPHERE_SIGN, 10, -1)
    with pytest.raises(ValueError):
        lhv.sample_ensemble(SPHERE_SIGN, 10, 2**64)


def test_states_normalized_and_isotropic():
    ens = lhv.sample_ensemble(SPHERE_SIGN, 100_000, 42)
    assert np.max(np.abs(np.linalg.norm(ens.states, axis=1) - 1)) <= 1e-12
    assert np.linalg.norm(ens.states.mean(axis=0)) <= 0.02


def test_single_state_ensemble():
    ens = lhv.sample_ensemble(SPHERE_SIGN, 1, 3)
    est = lhv.s_strong(ens, SPHERE_SIGN, AngleConfig.standard())
    assert est.n_pairs == 1
    assert sum(1 for c in est.per_term_histogram.values() if c) == 1


def test_constant_model_M():
    ens = lhv.sample_ensemble(CONSTANT, 500, 1)
    rng = np.random.default_rng(0)
    assert lhv.mean_correlation_M(ens, CONSTANT, eprb.random_direction(rng), eprb.random_direction(rng)) == -1.0


@settings(max_examples=30)
@given(seeds)
def test_sphere_perfect_anticorrelation(seed):
    ens = lhv.sample_ensemble(SPHERE_SIGN, 2000, seed)
    u = eprb.random_direction(np.random.default_rng(seed % 2**32))
    assert lhv.mean_correlation_M(ens, SPHERE_SIGN, u, u) == -1.0


def test_sphere_orthogonal_correlation():
    ens = lhv.sample_ensemble(SPHERE_SIGN, 10**6, 42)
    m = lhv.mean_correlation_M(ens, SPHERE_SIGN, Direction(0, 0, 1), Direction(1, 0, 0))
    assert abs(m) <= 0.003


@pytest.mark.parametrize("theta_deg", [0.0, 30.0, 45.0, 90.0, 135.0, 180.0])
def test_sphere_sign_matches_solid_angle(theta_deg):
    n = 200_000
    ens = lhv.sample_ensemble(SPHERE_SIGN, n, 5)
    m = lhv.mean_correlation_M(ens, SPHERE_SIGN, Direction.from_angles(0.0), Direction.from_angles(theta_deg))
    expected = _solid_angle_M(math.radians(theta_deg))
    assert abs(m - expected) <= 3 / math.sqrt(n)
    assert lhv.sphere_sign_correlation(math.radians(theta_deg)) == pytest.approx(expected, abs=1e-15)


def test_solid_angle_oracle_by_quadrature():
    # integrate sign(u.l) sign(v.l) over a latitude-longitude grid of the sphere
    u = np.array([0.0, 0.0, 1.0])
    v = np.array([math.sin(math.radians(45)), 0.0, math.cos(math.radians(45))])
    th = (np.arange(800) + 0.5) * math.pi / 800
    ph = (np.arange(1600) + 0.5) * 2 * math.pi / 1600
    T, P = np.meshgrid(th, ph, indexing="ij")
    pts = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1)
    w = np.sin(T)
    prod = -np.sign(pts @ u) * np.sign(pts @ v)
    assert abs((prod * w).sum() / w.sum() - (-0.5)) <= 1e-3


def test_s_strong_constant_model_is_two():
    ens = lhv.sample_ensemble(CONSTANT, 100, 1)
    for seed in range(10):
        est = lhv.s_strong(ens, CONSTANT, _random_config(seed))
        assert est.value == 2.0
        assert est.per_term_histogram == {-2: 100, 2: 0}


def test_s_strong_sphere_standard_config():
    # per-term solid-angle values at 45, 135, 45, 45 degrees: -1/2, +1/2, -1/2, -1/2
    expected = abs(sum(s * _solid_angle_M(math.radians(t)) for s, t in zip((1, -1, 1, 1), (45, 135, 45, 45))))
    assert expected == 2.0
    est = lhv.s_strong(lhv.sample_ensemble(SPHERE_SIGN, 10**6, 42), SPHERE_SIGN, AngleConfig.standard())
    assert abs(est.value - expected) <= 0.01
    assert est.dof_note == "Nf"


@settings(max_examples=40, deadline=None)
@given(seeds, seeds, st.sampled_from(["sphere-sign", "constant"]))
def test_strong_identities(seed, cfg_seed, name):
    model = lhv.get_model(name)
    ens = lhv.sample_ensemble(model, 2000, seed)
    cfg = _random_config(cfg_seed)
    terms = lhv.strong_terms(ens, model, cfg)
    assert set(np.unique(terms)) <= {-2, 2}
    est = lhv.s_strong(ens, model, cfg)
    assert est.value <= 2
    assert sum(est.per_term_histogram.values()) == 2000


def test_strong_rejects_per_set_model():
    ens = lhv.sample_ensemble(ADVERSARIAL_PER_SET, 10, 1)
    with pytest.raises(lhv.NoCounterfactualError):
        lhv.s_strong(ens, ADVERSARIAL_PER_SET, AngleConfig.standard())


@settings(max_examples=40, deadline=None)
@given(seeds, seeds, st.sampled_from(["sphere-sign", "constant", "adversarial-per-set"]))
def test_weak_identities(seed, cfg_seed, name):
    model = lhv.get_model(name)
    ens = lhv.weak_ensembles(model, 500, seed)
    cfg = _random_config(cfg_seed)
    terms = lhv.weak_terms(ens, model, cfg)
    assert set(np.unique(terms)) <= {-4, -2, 0, 2, 4}
    est = lhv.s_weak_lhv(ens, model, cfg)
    assert est.value <= 4
    assert sum(est.per_term_histogram.values()) == 500
    assert est.dof_note == "4Nf"


def test_adversarial_attains_four():
    for seed in range(5):
        est = lhv.s_weak_lhv(lhv.weak_ensembles(ADVERSARIAL_PER_SET, 100, seed), ADVERSARIAL_PER_SET, _random_config(seed))
        assert est.value == 4.0
        assert est.per_term_histogram[4] == 100


def test_weak_requires_equal_lengths():
    ens = [lhv.sample_ensemble(SPHERE_SIGN, n, 1) for n in (10, 10, 10, 11)]
    with pytest.raises(ValueError):
        lhv.s_weak_lhv(ens, SPHERE_SIGN, AngleConfig.standard())
    with pytest.raises(ValueError):
        lhv.s_weak_lhv(ens[:3], SPHERE_SIGN, AngleConfig.standard())


def test_weak_sphere_concentrates_on_strong_value():
    est = lhv.s_weak_lhv(lhv.weak_ensembles(SPHERE_SIGN, 10**6, 42), SPHERE_SIGN, AngleConfig.standard())
    assert abs(est.value - 2.0) <= 0.01


def test_model_ensemble_mismatch():
    ens = lhv.sample_ensemble(SPHERE_SIGN, 10, 1)
    with pytest.raises(ValueError):
        lhv.mean_correlation_M(ens, CONSTANT, Direction(0, 0, 1), Direction(0, 0, 1))


def test_builtin_models_outputs_are_pm1():
    rng = np.random.default_rng(0)
    for model in lhv.builtin_models():
        lam = model.sample(lhv.stream(1, 0), 100, 2)
        for _ in range(5):
            u = eprb.random_direction(rng)
            for out in (model.outcome_left(u, lam), model.outcome_right(u, lam)):
                assert set(np.unique(out)) <= {-1, 1}
    assert {m.name for m in lhv.builtin_models()} == {"sphere-sign", "constant", "adversarial-per-set"}


def test_sign_zero_is_plus_one():
    lam = np.array([[1.0, 0.0, 0.0]])
    assert SPHERE_SIGN.outcome_left(Direction(0, 0, 1), lam)[0] == 1
    assert SPHERE_SIGN.outcome_right(Direction(0, 0, 1), lam)[0] == -1


def test_sweep_contract():
    rows = lhv.convergence_sweep(SPHERE_SIGN, AngleConfig.standard(), [1000, 100], 5, 3)
    assert [r.n for r in rows] == [100, 1000]
    assert rows == lhv.convergence_sweep(SPHERE_SIGN, AngleConfig.standard(), [100, 1000], 5, 3, workers=3)
    with pytest.raises(ValueError):
        lhv.convergence_sweep(SPHERE_SIGN, AngleConfig.standard(), [], 5, 3)
    with pytest.raises(ValueError):
        lhv.convergence_sweep(SPHERE_SIGN, AngleConfig.standard(), [10], 1, 3)


def test_sweep_stddev_ratio_for_4n():
    rows = lhv.convergence_sweep(SPHERE_SIGN, AngleConfig.standard(), [2500, 10000, 40000], 100, 42)
    for lo, hi in zip(rows, rows[1:]):
        assert 0.3 <= hi.stddev / lo.stddev <= 0.7


def test_sweep_small_and_large_n_maxima():
    rows = lhv.convergence_sweep(SPHERE_SIGN, AngleConfig.standard(), [100, 100_000], 100, 42)
    assert rows[0].max_s_weak < 2.5
    assert rows[1].max_s_weak < 2.05


def test_derive_seed_stable():
    assert lhv.derive_seed(42, 1) == lhv.derive_seed(42, 1)
    assert lhv.derive_seed(42, 1) != lhv.derive_seed(42, 2)
    assert 0 <= lhv.derive_seed(2**64 - 1, 3) < 2**64

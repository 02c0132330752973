"""Machine-checked verdicts on the quantitative claims about CHSH.

Each check recomputes a claim from the library and compares it to the
expected statement. ``confirmed`` and ``refuted`` are strict pass/fail;
``qualified`` marks claims where the numbers refine the original statement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import eprb, lhv, linalg, operators
from .eprb import Direction
from .operators import AngleConfig
from .optimize import optimize_angles

CONFIRMED = "confirmed"
REFUTED = "refuted"
QUALIFIED = "qualified"
VERDICTS = (CONFIRMED, REFUTED, QUALIFIED)

TSIRELSON = 2.0 * math.sqrt(2.0)
ANALYTIC_ATOL = 1e-12
RANDOM_CASES = 1000
CONFIG_SUITE = 100
DENSE_CASES = 20


@dataclass(frozen=True)
class Claim:
    claim_id: str
    paper_location: str
    expected: str
    observed: str
    verdict: str
    dof_note: str = ""


@dataclass(frozen=True)
class AuditSettings:
    n_pairs: int = 100_000
    reps: int = 10
    seed: int = 42
    n_values: tuple[int, ...] = (100, 1000, 10000)
    resolution: int = 8
    workers: int = 1


def _fixed(x: float, digits: int = 9) -> str:
    out = f"{x:.{digits}f}"
    return out[1:] if out.startswith("-") and float(out) == 0.0 else out


def _verdict(ok: bool) -> str:
    return CONFIRMED if ok else REFUTED


def _rng(settings: AuditSettings, tag: int) -> np.random.Generator:
    return lhv.stream(settings.seed, 0xA0D17, tag)


def _random_configs(rng: np.random.Generator, count: int) -> list[AngleConfig]:
    return [AngleConfig(*(eprb.random_direction(rng) for _ in range(4))) for _ in range(count)]


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    q = rng.normal(size=4)
    w, x, y, z = q / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def _rotate(r: np.ndarray, d: Direction) -> Direction:
    return Direction.normalized(r @ d.as_array())


# -- single pair --------------------------------------------------------------


def check_marginals(s: AuditSettings) -> Claim:
    rng = _rng(s, 1)
    psi = eprb.singlet()
    worst = 0.0
    for _ in range(RANDOM_CASES):
        sig = eprb.spin_observable(eprb.random_direction(rng))
        worst = max(worst, abs(linalg.expectation(psi, eprb.embed_left(sig))), abs(linalg.expectation(psi, eprb.embed_right(sig))))
    return Claim("marginal-zero", "Eq. (5)", "<sigma_L.u> = <sigma_R.v> = 0", f"max |<.>| = {worst:.3e} over {RANDOM_CASES} directions", _verdict(worst <= ANALYTIC_ATOL))


def check_singlet_correlation(s: AuditSettings) -> Claim:
    rng = _rng(s, 2)
    worst = 0.0
    for _ in range(RANDOM_CASES):
        u, v = eprb.random_direction(rng), eprb.random_direction(rng)
        worst = max(worst, abs(eprb.correlation_E(u, v) + u.dot(v)))
    return Claim("singlet-correlation", "Eq. (6)", "E(u,v) = -u.v", f"max |E + u.v| = {worst:.3e} over {RANDOM_CASES} pairs", _verdict(worst <= ANALYTIC_ATOL))


def check_rotational_invariance(s: AuditSettings) -> Claim:
    rng = _rng(s, 3)
    worst = 0.0
    for _ in range(100):
        u, v = eprb.random_direction(rng), eprb.random_direction(rng)
        r = _random_rotation(rng)
        worst = max(worst, abs(eprb.correlation_E(_rotate(r, u), _rotate(r, v)) - eprb.correlation_E(u, v)))
    return Claim("rotational-invariance", "Sec. II.A", "E(Ru,Rv) = E(u,v)", f"max deviation = {worst:.3e} over 100 rotations", _verdict(worst <= ANALYTIC_ATOL))


def check_perfect_anticorrelation(s: AuditSettings) -> Claim:
    rng = _rng(s, 4)
    ens = lhv.sample_ensemble(lhv.SPHERE_SIGN, min(s.n_pairs, 10_000), s.seed, workers=s.workers)
    q_worst, lhv_values = 0.0, set()
    for _ in range(100):
        u = eprb.random_direction(rng)
        q_worst = max(q_worst, abs(eprb.correlation_E(u, u) + 1.0))
        lhv_values.add(lhv.mean_correlation_M(ens, lhv.SPHERE_SIGN, u, u))
    ok = q_worst <= ANALYTIC_ATOL and lhv_values == {-1.0}
    observed = f"quantum max |E(u,u)+1| = {q_worst:.3e}; sphere-sign M(u,u) values = {sorted(lhv_values)}"
    return Claim("perfect-anticorrelation", "Sec. II.C", "E(u,u) = -1 and M(u,u) = -1", observed, _verdict(ok))


def check_noncommuting(s: AuditSettings) -> Claim:
    comms = operators.pairwise_commutators(AngleConfig.standard())
    shared = [comms[0], comms[1], comms[4], comms[5]]  # pairs sharing a or b
    ok = min(shared) > 0.5
    observed = "|[O_i,O_j]|_max (12,13,14,23,24,34) = " + ", ".join(_fixed(c, 9) for c in comms)
    return Claim("noncommuting-terms", "Sec. IV.B", "terms sharing one setting do not commute", observed, _verdict(ok))


def check_product_eigenvectors(s: AuditSettings) -> Claim:
    verdicts = operators.product_eigenvector_analysis(operators.bell_operator_strong(AngleConfig.standard()))
    parts = []
    for v in verdicts:
        if v.has_product_vector:
            parts.append(f"lambda={_fixed(v.eigenvalue)} (dim {v.eigenspace_dim}): product witness, residual {v.residual:.2e}, |det| {v.det_magnitude:.2e}")
        else:
            parts.append(f"lambda={_fixed(v.eigenvalue)} (dim {v.eigenspace_dim}): entangled, |det W| = {_fixed(v.det_magnitude, 12)}")
    any_product = any(v.has_product_vector for v in verdicts)
    nondeg = [v for v in verdicts if v.eigenspace_dim == 1]
    consistent = all(not v.has_product_vector and abs(v.det_magnitude - 0.5) <= 1e-9 for v in nondeg)
    if not consistent:
        verdict = REFUTED
    else:
        verdict = QUALIFIED if any_product else CONFIRMED
    return Claim("no-product-eigenvector", "Eq. (14)", "Bell operator has no product eigenvector", "; ".join(parts), verdict)


def check_linearity(s: AuditSettings) -> Claim:
    rng = _rng(s, 5)
    worst = 0.0
    for _ in range(RANDOM_CASES):
        r, q = linalg.random_hermitian(rng, 4), linalg.random_hermitian(rng, 4)
        phi = linalg.random_state(rng, 4)
        worst = max(worst, abs(linalg.expectation(phi, r + q) - linalg.expectation(phi, r) - linalg.expectation(phi, q)))
    return Claim("expectation-linearity", "Eq. (vn1)", "<R+S> = <R> + <S> for non-commuting R, S", f"max deviation = {worst:.3e} over {RANDOM_CASES} pairs", _verdict(worst <= ANALYTIC_ATOL))


def check_strong_weak_same_number(s: AuditSettings) -> Claim:
    rng = _rng(s, 6)
    worst = 0.0
    for cfg in [AngleConfig.standard()] + _random_configs(rng, 100):
        worst = max(worst, abs(operators.s_strong_quantum(cfg) - operators.s_weak_quantum(cfg)))
    return Claim("strong-weak-quantum-value", "Sec. IV.B", "|<psi|B|psi>| equals S_weak on four pairs", f"max difference = {worst:.3e} over 101 configs", _verdict(worst <= ANALYTIC_ATOL))


# -- four pairs -----------------------------------------------------------------


def check_same_set(s: AuditSettings) -> Claim:
    rng = _rng(s, 7)
    worst = 0.0
    for _ in range(100):
        u, v = eprb.random_direction(rng), eprb.random_direction(rng)
        for k in range(1, 5):
            worst = max(worst, abs(operators.generalized_correlation_Ekl(k, k, u, v) + u.dot(v)))
    return Claim("same-set-correlation", "Eq. (20)", "E_kk(u,v) = -u.v", f"max |E_kk + u.v| = {worst:.3e}", _verdict(worst <= ANALYTIC_ATOL))


def check_cross_set(s: AuditSettings) -> Claim:
    rng = _rng(s, 8)
    worst, worst_dense = 0.0, 0.0
    for case in range(100):
        u, v = eprb.random_direction(rng), eprb.random_direction(rng)
        for k in range(1, 5):
            for l in range(1, 5):
                if k != l:
                    worst = max(worst, abs(operators.generalized_correlation_Ekl(k, l, u, v)))
        if case < DENSE_CASES:
            k, l = (case % 4) + 1, ((case + 1 + case // 4) % 4) + 1
            fac = operators.generalized_correlation_Ekl(k, l, u, v)
            den = operators.generalized_correlation_Ekl(k, l, u, v, strategy="dense")
            worst_dense = max(worst_dense, abs(fac - den))
    ok = worst <= ANALYTIC_ATOL and worst_dense <= ANALYTIC_ATOL
    observed = f"max |E_kl| (k != l) = {worst:.3e}; max |factored - dense| = {worst_dense:.3e}"
    return Claim("cross-set-zero", "Eq. (21)", "E_kl(u,v) = 0 for k != l", observed, _verdict(ok))


def check_slot_commutation(s: AuditSettings) -> Claim:
    rng = _rng(s, 9)
    worst = 0.0
    for k in range(1, 5):
        for l in range(k + 1, 5):
            x = operators.embed_pair_observable(k, eprb.correlation_observable(eprb.random_direction(rng), eprb.random_direction(rng))).dense()
            y = operators.embed_pair_observable(l, eprb.correlation_observable(eprb.random_direction(rng), eprb.random_direction(rng))).dense()
            worst = max(worst, linalg.max_norm(linalg.commutator(x, y)))
    return Claim("slot-commutation", "Sec. V.A", "observables on distinct sets commute", f"max |[X_k, Y_l]|_max = {worst:.3e}", _verdict(worst <= ANALYTIC_ATOL))


def check_tsirelson(s: AuditSettings) -> Claim:
    std = operators.s_weak_quantum(AngleConfig.standard())
    opt = optimize_angles("s_weak_quantum", s.resolution, workers=s.workers)
    ok = abs(std - TSIRELSON) <= ANALYTIC_ATOL and abs(opt.value - TSIRELSON) <= 1e-6
    angles = ",".join(f"{a:.6f}" for a in opt.angles_deg)
    observed = f"standard config {std:.15g}; optimizer {opt.value:.15g} at ({angles}) deg"
    return Claim("tsirelson-max", "Eq. (24)", f"max S_weak = 2 sqrt 2 = {TSIRELSON:.15g}", observed, _verdict(ok), "4Nf")


def check_tsirelson_ceiling(s: AuditSettings) -> Claim:
    rng = _rng(s, 10)
    best = max(operators.chsh_dot_value(c) for c in _random_configs(rng, 10_000))
    return Claim("tsirelson-ceiling", "Eq. (24)", "S_weak <= 2 sqrt 2 for every config", f"max over 10000 random configs = {best:.15g}", _verdict(best <= TSIRELSON + 1e-9), "4Nf")


def check_printed_term_order(s: AuditSettings) -> Claim:
    cfg = AngleConfig.standard()
    a, ap, b, bp = cfg.directions()
    printed = abs(
        operators.generalized_correlation_Ekl(1, 1, a, b)
        - operators.generalized_correlation_Ekl(2, 2, ap, b)
        + operators.generalized_correlation_Ekl(3, 3, a, bp)
        + operators.generalized_correlation_Ekl(4, 4, ap, bp)
    )
    canonical = operators.s_weak_quantum(cfg)
    observed = f"printed order (a,b),(a',b),(a,b'),(a',b') gives {_fixed(printed, 12)}; canonical order gives {_fixed(canonical, 12)}"
    return Claim("printed-term-order", "Eq. (23)", "same value as the CHSH ordering", observed, CONFIRMED if abs(printed - canonical) <= ANALYTIC_ATOL else QUALIFIED, "4Nf")


# -- hidden variables -------------------------------------------------------------


def _strong_suite(s: AuditSettings):
    rng = _rng(s, 11)
    configs = [AngleConfig.standard()] + _random_configs(rng, CONFIG_SUITE - 1)
    for model in lhv.builtin_models():
        if not model.counterfactual:
            continue
        ens = lhv.sample_ensemble(model, s.n_pairs, lhv.derive_seed(s.seed, 11), workers=s.workers)
        for cfg in configs:
            yield model, ens, cfg


def check_strong_identities(s: AuditSettings) -> tuple[Claim, Claim]:
    term_values: set[int] = set()
    max_value = 0.0
    count = 0
    for model, ens, cfg in _strong_suite(s):
        terms = lhv.strong_terms(ens, model, cfg)
        term_values.update(int(t) for t in np.unique(terms))
        max_value = max(max_value, lhv.s_strong(ens, model, cfg).value)
        count += 1
    pm2 = Claim("strong-term-pm2", "Eq. (11)", "every per-pair term is +2 or -2", f"observed term values {sorted(term_values)} over {count} model/config runs at N = {s.n_pairs}", _verdict(term_values <= {-2, 2}), "Nf")
    bound = Claim("strong-bound", "Eq. (12)", "S_strong <= 2", f"max S_strong = {max_value:.15g}", _verdict(max_value <= 2.0), "Nf")
    return pm2, bound


def check_weak_identities(s: AuditSettings) -> tuple[Claim, Claim]:
    rng = _rng(s, 12)
    configs = [AngleConfig.standard()] + _random_configs(rng, 19)
    term_values: set[int] = set()
    max_value = 0.0
    n = min(s.n_pairs, 10_000)
    for m_idx, model in enumerate(lhv.builtin_models()):
        ens = lhv.weak_ensembles(model, n, lhv.derive_seed(s.seed, 12, m_idx), workers=s.workers)
        for cfg in configs:
            term_values.update(int(t) for t in np.unique(lhv.weak_terms(ens, model, cfg)))
            max_value = max(max_value, lhv.s_weak_lhv(ens, model, cfg).value)
    adv = lhv.s_weak_lhv(lhv.weak_ensembles(lhv.ADVERSARIAL_PER_SET, n, s.seed), lhv.ADVERSARIAL_PER_SET, AngleConfig.standard()).value
    values = Claim("weak-term-values", "Eq. (26)", "per-tuple terms in {-4,-2,0,2,4}", f"observed term values {sorted(term_values)}", _verdict(term_values <= set(lhv.WEAK_TERMS)), "4Nf")
    bound = Claim("weak-bound", "Eq. (27)", "S_weak <= 4 (attainable)", f"max S_weak = {max_value:.15g}; adversarial-per-set S_weak = {adv:.15g}", _verdict(max_value <= 4.0 and adv == 4.0), "4Nf")
    return values, bound


def check_dof(s: AuditSettings) -> Claim:
    n = min(s.n_pairs, 1000)
    cfg = AngleConfig.standard()
    strong = lhv.s_strong(lhv.sample_ensemble(lhv.SPHERE_SIGN, n, s.seed), lhv.SPHERE_SIGN, cfg)
    weak_sets = lhv.weak_ensembles(lhv.SPHERE_SIGN, n, s.seed)
    weak = lhv.s_weak_lhv(weak_sets, lhv.SPHERE_SIGN, cfg)
    consumed = sum(len(e) for e in weak_sets)
    ok = strong.dof_note == "Nf" and weak.dof_note == "4Nf" and consumed == 4 * n
    observed = f"strong estimator uses {strong.n_pairs} hidden states; weak estimator uses {consumed} ({consumed // n}N)"
    return Claim("dof-accounting", "Sec. III", "strong system has Nf degrees of freedom, weak system 4Nf", observed, _verdict(ok), "Nf vs 4Nf")


def check_concentration(s: AuditSettings) -> Claim:
    n_values = sorted(set(s.n_values) | {s.n_pairs})
    rows = lhv.convergence_sweep(lhv.SPHERE_SIGN, AngleConfig.standard(), n_values, s.reps, s.seed, workers=s.workers)
    observed = "; ".join(f"N={r.n}: mean {r.mean_s_weak:.6f}, max {r.max_s_weak:.6f}, sd {r.stddev:.6f}" for r in rows)
    return Claim(
        "finite-n-concentration",
        "Sec. III; Sec. V.B",
        "four finite sets converge to one ideal ensemble as N grows",
        f"sphere-sign, {s.reps} reps: {observed}",
        QUALIFIED,
        "4Nf",
    )


CHECKS: tuple[Callable[[AuditSettings], object], ...] = (
    check_marginals,
    check_singlet_correlation,
    check_rotational_invariance,
    check_perfect_anticorrelation,
    check_noncommuting,
    check_product_eigenvectors,
    check_linearity,
    check_strong_weak_same_number,
    check_same_set,
    check_cross_set,
    check_slot_commutation,
    check_tsirelson,
    check_tsirelson_ceiling,
    check_printed_term_order,
    check_strong_identities,
    check_weak_identities,
    check_dof,
    check_concentration,
)

AUDIT_CLAIM_IDS = (
    "marginal-zero",
    "singlet-correlation",
    "rotational-invariance",
    "perfect-anticorrelation",
    "noncommuting-terms",
    "no-product-eigenvector",
    "expectation-linearity",
    "strong-weak-quantum-value",
    "same-set-correlation",
    "cross-set-zero",
    "slot-commutation",
    "tsirelson-max",
    "tsirelson-ceiling",
    "printed-term-order",
    "strong-term-pm2",
    "strong-bound",
    "weak-term-values",
    "weak-bound",
    "dof-accounting",
    "finite-n-concentration",
)


@dataclass(frozen=True)
class ClaimsAuditReport:
    claims: tuple[Claim, ...]

    def __post_init__(self) -> None:
        ids = [c.claim_id for c in self.claims]
        if sorted(ids) != sorted(AUDIT_CLAIM_IDS):
            missing = set(AUDIT_CLAIM_IDS) - set(ids)
            extra = [i for i in ids if ids.count(i) > 1 or i not in AUDIT_CLAIM_IDS]
            raise ValueError(f"audit report incomplete: missing {sorted(missing)}, unexpected {sorted(set(extra))}")
        for c in self.claims:
            if c.verdict not in VERDICTS:
                raise ValueError(f"bad verdict {c.verdict!r} for {c.claim_id}")

    @property
    def refuted(self) -> list[Claim]:
        return [c for c in self.claims if c.verdict == REFUTED]

    def by_id(self, claim_id: str) -> Claim:
        for c in self.claims:
            if c.claim_id == claim_id:
                return c
        raise KeyError(claim_id)


def run_audit(settings: AuditSettings = AuditSettings()) -> ClaimsAuditReport:
    claims: list[Claim] = []
    for check in CHECKS:
        out = check(settings)
        claims.extend(out if isinstance(out, tuple) else (out,))
    return ClaimsAuditReport(tuple(claims))


def claim_rows(report: ClaimsAuditReport) -> list[dict]:
    return [
        {
            "claim_id": c.claim_id,
            "paper_location": c.paper_location,
            "expected": c.expected,
            "observed": c.observed,
            "verdict": c.verdict,
            "dof_note": c.dof_note,
        }
        for c in report.claims
    ]


AUDIT_COLUMNS: Sequence[str] = ("claim_id", "paper_location", "expected", "observed", "verdict", "dof_note")

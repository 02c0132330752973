import pytest

from chsh_lab import audit, cli


@pytest.fixture(scope="module")
def report():
    return audit.run_audit(audit.AuditSettings(n_pairs=20_000, reps=5))


def test_every_claim_present_once(report):
    ids = [c.claim_id for c in report.claims]
    assert sorted(ids) == sorted(audit.AUDIT_CLAIM_IDS)
    assert len(ids) == len(set(ids))


def test_verdicts(report):
    qualified = {"no-product-eigenvector", "finite-n-concentration", "printed-term-order"}
    for c in report.claims:
        expected = audit.QUALIFIED if c.claim_id in qualified else audit.CONFIRMED
        assert c.verdict == expected, (c.claim_id, c.observed)
    assert report.refuted == []


def test_product_eigenvector_claim_details(report):
    c = report.by_id("no-product-eigenvector")
    assert "product witness" in c.observed and "0.500000000000" in c.observed


def test_dof_notes(report):
    assert report.by_id("strong-bound").dof_note == "Nf"
    assert report.by_id("weak-bound").dof_note == "4Nf"
    assert report.by_id("dof-accounting").dof_note == "Nf vs 4Nf"


def test_report_rejects_missing_or_duplicate_claims(report):
    with pytest.raises(ValueError):
        audit.ClaimsAuditReport(report.claims[1:])
    with pytest.raises(ValueError):
        audit.ClaimsAuditReport(report.claims + report.claims[:1])


def test_refuted_claim_gives_exit_4(monkeypatch, capsys):
    def broken(s):
        return audit.Claim("marginal-zero", "Eq. (5)", "0", "1", audit.REFUTED)

    checks = (broken,) + audit.CHECKS[1:]
    monkeypatch.setattr(audit, "CHECKS", checks)
    code = cli.main(["audit", "--n", "2000", "--reps", "2", "--n-values", "100"])
    _, err = capsys.readouterr()
    assert code == cli.EXIT_INVARIANT
    assert "marginal-zero" in err

import numpy as np
import pytest

from delaydiff.audit import audit_hypotheses
from delaydiff.core import AffineDelay, ConstantDelay


def test_affine_blowup_verdicts():
    r = audit_hypotheses(AffineDelay(0.75, 1.0), [[0.5]], 100.0, p=1)
    assert r.status("H1") == "holds"
    assert r.status("H6") == "holds"
    assert r["H6"].witness == pytest.approx(4.0)
    assert r.status("H9") == "fails"
    assert r["H9"].witness == pytest.approx(2.0)
    assert r.status("H10") == "fails"
    assert r.status("H7") == "holds"


def test_constant_delay_verdicts():
    r = audit_hypotheses(ConstantDelay(1.0), [[0.5]], 10.0, p=2)
    for key in ("H1", "H2", "H3", "H4", "H5", "H6", "H7", "H8", "H9", "H10", "H11"):
        assert r.status(key) == "holds", key
    assert r["H10"].witness == 1.0


def test_vanishing_delay_fails_h1():
    r = audit_hypotheses(AffineDelay(1.0, 0.0, at_zero=1.0), [[0.5]], 5.0)
    assert r.status("H1") == "fails"
    assert r.status("H11") == "undecidable"
    assert r.status("H9") == "undecidable"


@pytest.mark.parametrize("delay, expected", [(ConstantDelay(0.5), "holds"),
                                               (AffineDelay(0.5, 1.0), "holds"),
                                               (AffineDelay(1.0, 0.0, at_zero=1.0), "fails")])
def test_h1_verdict_stable_across_horizons(delay, expected):
    statuses = {audit_hypotheses(delay, [[0.5]], T).status("H1") for T in np.linspace(1, 30, 8)}
    assert statuses == {expected}


def test_report_serialises():
    r = audit_hypotheses(ConstantDelay(1.0), [[2.0]], 5.0)
    d = r.to_dict()
    assert d["hypotheses"]["H7"]["status"] == "fails"
    assert set(d["hypotheses"]) == {f"H{i}" for i in range(1, 12)}
    with pytest.raises(ValueError):
        audit_hypotheses(ConstantDelay(1.0), [[0.5]], 0.0)

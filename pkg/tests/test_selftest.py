from src.maxplus_tails.core.selftest import EMPIRICAL_N, _empirical_check
from src.maxplus_tails.models.library import builtin


def test_empirical_check_records_its_horizon(small_settings):
    model, facts = builtin("mm1", mu=1.0, lam=0.5)
    result = _empirical_check("mm1", model, facts, small_settings.with_changes(n=4))
    payload = result.to_dict()
    assert payload["check"] == "empirical"
    assert payload["detail"]["n"] == EMPIRICAL_N
    assert payload["detail"]["expected"] == 0.5
    low, high = payload["detail"]["ci"]
    assert low <= payload["detail"]["theta_star"] <= high

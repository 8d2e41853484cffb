import math

import pytest

from optotomo.feasibility import TABLE_I, SystemRecord, feasibility, feasibility_table, regime_flag


@pytest.fixture(scope="module")
def rows():
    return feasibility_table()


def test_all_rows_computed(rows):
    assert len(rows) == 11
    assert all(r.ok for r in rows)


def test_regime_flags_follow_printed_ratio(rows):
    for sys, r in zip(TABLE_I, rows):
        assert r.regime_flag == regime_flag(sys.printed["sideband_ratio"]), sys.name


def test_pulse_within_factor_of_printed(rows):
    for r in rows:
        assert 0.5 <= r.deviations["tau_opt"] <= 2, r.name
        assert 0.2 <= r.deviations["pulse_energy"] <= 5, r.name


def test_pulse_is_half_period(rows):
    for sys, r in zip(TABLE_I, rows):
        assert r.tau_opt == pytest.approx(math.pi / sys.omega_m, rel=1e-9)
        assert r.k == 32
        assert r.chi == pytest.approx(3.039, abs=1e-3)


def test_regime_thresholds():
    assert regime_flag(55) == "non-resolved"
    assert regime_flag(1.0) == "marginal"
    assert regime_flag(0.1) == "marginal"
    assert regime_flag(0.09) == "resolved"


def test_zero_coupling_reported_not_raised():
    r = feasibility(SystemRecord("dark", 1e4, 1e-12, 1.0, 0.0, 1e5))
    assert not r.ok
    assert "g0" in r.error
    assert math.isnan(r.pulse_energy)


def test_bad_u_reported():
    assert "u must" in feasibility(TABLE_I[0], u=2.5).error


@pytest.mark.parametrize("field", ["omega_m", "mass", "gamma_m", "kappa_o"])
def test_invalid_record_rejected(field):
    kwargs = dict(name="x", omega_m=1e4, mass=1e-12, gamma_m=1.0, g0=10.0, kappa_o=1e5)
    kwargs[field] = -1.0
    with pytest.raises(ValueError, match=field):
        SystemRecord(**kwargs)
    kwargs[field] = math.nan
    with pytest.raises(ValueError):
        SystemRecord(**kwargs)

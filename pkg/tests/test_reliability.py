import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ftbn.ft_model import PLC_PUBLISHED_PROBABILITIES, PLC_RATES, PrimaryEvent
from ftbn.reliability import Exponential, Fixed, failure_probability, probability_table


@pytest.mark.parametrize("rate, expected", [(6.6e-8, 0.02605), (4.82e-7, 0.17535)])
def test_table_values(rate, expected):
    assert round(failure_probability(Exponential(rate), 4e5), 5) == expected


def test_zero_time():
    assert failure_probability(Exponential(3.0), 0) == 0.0


def test_fixed_ignores_time():
    assert failure_probability(Fixed(0.5), 0) == 0.5
    assert failure_probability(Fixed(0.5), 1e9) == 0.5


@pytest.mark.parametrize("cls", sorted(PLC_RATES))
def test_all_components_within_published_precision(cls):
    p = failure_probability(Exponential(PLC_RATES[cls]), 4e5)
    assert abs(p - PLC_PUBLISHED_PROBABILITIES[cls]) <= 1e-5


def test_probability_table(plc_tree):
    table = probability_table(plc_tree.primaries, 4e5)
    assert len(table) == 18
    assert round(table["CPU_B"], 5) == 0.17535
    assert round(table["Tribus_C"], 5) == 0.0008
    assert probability_table([], 4e5) == {}
    assert probability_table([PrimaryEvent("x", Fixed(0.5))], 123.0) == {"x": 0.5}


def test_limit():
    assert abs(failure_probability(Exponential(1e-6), 1e12) - 1.0) < 1e-9


@pytest.mark.parametrize("bad", [-1.0, math.inf, math.nan])
def test_invalid_rate(bad):
    with pytest.raises(ValueError):
        Exponential(bad)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        Fixed(1.5)
    with pytest.raises(ValueError):
        failure_probability(Fixed(0.1), -1)


rates = st.floats(0, 1e-3)
times = st.floats(0, 1e7)


@given(rates, rates, times, times)
def test_monotone_in_rate_and_time(r1, r2, t1, t2):
    lo_r, hi_r = sorted((r1, r2))
    lo_t, hi_t = sorted((t1, t2))
    assert failure_probability(Exponential(lo_r), lo_t) <= failure_probability(Exponential(hi_r), lo_t)
    assert failure_probability(Exponential(lo_r), lo_t) <= failure_probability(Exponential(lo_r), hi_t)
    assert 0.0 <= failure_probability(Exponential(hi_r), hi_t) <= 1.0

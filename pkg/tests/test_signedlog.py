import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from qps.signedlog import SignedLog

finite = st.floats(min_value=-1e12, max_value=1e12,
                   allow_nan=False, allow_infinity=False)
nonzero = finite.filter(lambda x: abs(x) > 1e-12)


def close(a, b, rel=1e-12):
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


@given(nonzero, nonzero)
def test_mul_matches_floats(a, b):
    r = SignedLog.from_float(a) * SignedLog.from_float(b)
    assert r.sign == np.sign(a * b)
    assert close(r.log_mag, math.log(abs(a * b)))


@given(nonzero, nonzero)
def test_add_matches_floats(a, b):
    r = SignedLog.from_float(a) + SignedLog.from_float(b)
    s = a + b
    if s == 0.0:
        assert r.sign == 0
    elif r.sign != 0:
        assert r.sign == np.sign(s)
        assert close(r.log_mag, math.log(abs(s)), rel=1e-9)


@given(nonzero, nonzero)
def test_div_roundtrip(a, b):
    r = SignedLog.from_float(a) / SignedLog.from_float(b)
    assert close(r.to_float(), a / b, rel=1e-12)


def test_zero_handling():
    z = SignedLog.zero()
    one = SignedLog.one()
    assert (z + one).to_float() == 1.0
    assert (z * one).is_zero
    assert (one - one).is_zero
    assert (-one).sign == -1


def test_exact_cancellation():
    x = SignedLog.from_float(3.7)
    assert (x - x).is_zero


def test_huge_magnitudes_no_overflow():
    # product of 1000 factors of size 1e100 stays finite in log form
    x = SignedLog.one()
    f = SignedLog.from_float(1e100)
    for _ in range(1000):
        x = x * f
    assert close(x.log_mag, 1000 * math.log(1e100))
    assert x.to_float() == math.inf  # overflow only on explicit conversion


@settings(max_examples=200)
@given(st.lists(nonzero, min_size=2, max_size=8))
def test_sum_associativity(vals):
    total = SignedLog.zero()
    for v in vals:
        total = total + SignedLog.from_float(v)
    s = sum(vals)
    if abs(s) > 1e-6 * max(abs(v) for v in vals):
        assert close(total.to_float(), s, rel=1e-6)

import io
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from awm.empirical import (
    EmpiricalDistribution,
    canonicalize,
    empirical_gini,
    load_households,
    loads_households,
    lorenz_ordinates,
    merge,
)
from awm.errors import DegenerateError, InputError, ParseError


def test_two_rows():
    d = loads_households("weight,networth\n1,0.5\n1,1.5\n")
    assert len(d) == 2
    assert d.dropped == 0


def test_extra_columns_and_order():
    d = loads_households("id,networth,weight\na,3,2\nb,1,1\n")
    assert np.array_equal(d.networth, [1.0, 3.0])
    assert np.array_equal(d.weights, [1.0, 2.0])


def test_negative_weight_rejected():
    with pytest.raises(ParseError) as info:
        loads_households("weight,networth\n1,0.5\n-1,1.5\n")
    assert info.value.line == 3
    assert str(info.value).startswith("line 3:")
    with pytest.raises(InputError):
        EmpiricalDistribution([-1.0], [1.0])


@pytest.mark.parametrize("text,line", [
    ("", 1),
    ("w,n\n1,2\n", 1),
    ("weight,networth\n1,abc\n", 2),
    ("weight,networth\n1,2\n1\n", 3),
    ("weight,networth\n1,nan\n", 2),
])
def test_parse_errors(text, line):
    with pytest.raises(ParseError) as info:
        loads_households(text)
    assert info.value.line == line


def test_zero_weights_dropped(caplog):
    with caplog.at_level(logging.WARNING):
        d = loads_households("weight,networth\n0,5\n1,1\n\n1,2\n")
    assert len(d) == 2 and d.dropped == 1
    assert "dropped 1" in caplog.text


def test_large_file_row_count(tmp_path):
    rng = np.random.default_rng(3)
    n = 30_000
    wt = rng.uniform(100, 5000, n)
    nw = rng.lognormal(11, 2, n) - 2e4
    path = tmp_path / "survey.csv"
    with open(path, "w") as fh:
        fh.write("weight,networth\n")
        for a, b in zip(wt, nw):
            fh.write(f"{a:.17g},{b:.17g}\n")
    d = load_households(path)
    assert len(d) == n
    assert d.source == str(path)


def test_merge():
    a = loads_households("weight,networth\n1000,1\n2000,5\n")
    empty = EmpiricalDistribution([], [])
    same = merge(a, empty)
    assert np.array_equal(same.weights, a.weights) and np.array_equal(same.networth, a.networth)
    extra = EmpiricalDistribution(np.ones(400), np.full(400, 1e9))
    assert len(merge(a, extra)) == len(a) + 400
    with pytest.raises(InputError):
        merge(canonicalize(a), extra)


@pytest.mark.parametrize("w,expected", [((0.5, 1.5), (0.5, 1.5)), ((1.0, 3.0), (0.5, 1.5))])
def test_canonicalize(w, expected):
    d = canonicalize(EmpiricalDistribution([1.0, 1.0], w))
    assert np.allclose(d.weights, [0.5, 0.5], rtol=0, atol=1e-15)
    assert np.allclose(d.networth, expected, rtol=0, atol=1e-15)
    twice = canonicalize(d)
    assert np.allclose(twice.networth, d.networth, rtol=1e-15)
    assert np.allclose(twice.weights, d.weights, rtol=1e-15)


def test_canonicalize_degenerate():
    with pytest.raises(DegenerateError):
        canonicalize(EmpiricalDistribution([1.0, 1.0], [-1.0, 0.5]))
    with pytest.raises(DegenerateError):
        canonicalize(EmpiricalDistribution([], []))


@pytest.mark.parametrize("w,l_mid", [((0.5, 1.5), 0.25), ((-0.5, 2.5), -0.25)])
def test_ordinates(w, l_mid):
    c = lorenz_ordinates(EmpiricalDistribution([1.0, 1.0], w))
    assert np.allclose(c.f, [0.0, 0.5, 1.0])
    assert np.allclose(c.l, [0.0, l_mid, 1.0], atol=1e-15)


def test_equal_wealth_is_diagonal_and_ties_merge():
    d = EmpiricalDistribution([1, 2, 3], [4.0, 4.0, 4.0])
    c = lorenz_ordinates(d)
    assert np.allclose(c.f, c.l)
    assert empirical_gini(d) == pytest.approx(0.0, abs=1e-15)
    tied = lorenz_ordinates(EmpiricalDistribution([1, 1, 1, 1], [1.0, 2.0, 2.0, 5.0]))
    assert np.allclose(tied.f, [0.0, 0.25, 0.75, 1.0])


def test_gini_with_negative_wealth_exceeds_one():
    # most households in debt, one holding all positive wealth
    d = EmpiricalDistribution(np.ones(10), [-1.0] * 9 + [19.0])
    assert empirical_gini(d) > 1.0


records = st.lists(st.tuples(st.floats(0.1, 100.0), st.floats(0.01, 1e4)), min_size=2, max_size=40)


@given(records, st.randoms(), st.floats(0.01, 1000.0))
@settings(max_examples=60, deadline=None)
def test_invariance_to_order_and_weight_scale(rows, rnd, scale):
    wt, nw = map(np.array, zip(*rows))
    base = lorenz_ordinates(EmpiricalDistribution(wt, nw))
    perm = list(range(len(rows)))
    rnd.shuffle(perm)
    shuffled = lorenz_ordinates(EmpiricalDistribution(wt[perm] * scale, nw[perm]))
    fg = np.linspace(0, 1, 101)
    assert np.allclose(base(fg), shuffled(fg), atol=1e-12)


@given(records)
@settings(max_examples=60, deadline=None)
def test_ordinates_convex_and_bounded(rows):
    wt, nw = map(np.array, zip(*rows))
    c = lorenz_ordinates(EmpiricalDistribution(wt, nw))
    assert c.l[0] == 0.0 and c.l[-1] == 1.0 and c.f[-1] == 1.0
    assert np.all(np.diff(c.f) > 0)
    assert np.all(c.l <= c.f + 1e-12)
    assert 0.0 <= empirical_gini(EmpiricalDistribution(wt, nw)) < 1.0


def test_stream_source():
    d = load_households(io.StringIO("Weight , NetWorth\n2,1\n"))
    assert len(d) == 1

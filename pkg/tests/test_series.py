import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walsh_synth import eckart, series, walsh
from walsh_synth.series import ErrorBudget, WalshSeries
from walsh_synth.walsh import SampledFunction

REFERENCE_19 = [1, 2, 4, 7, 8, 11, 13, 14, 16, 19, 21, 22, 25, 32, 35, 37, 38, 64, 67]


def sampled(fn, n):
    return SampledFunction.from_callable(fn, n)


def test_terms_sorted_by_magnitude():
    s = WalshSeries(((3, 0.1), (1, -2.0), (2, 0.1)), 2)
    assert s.terms == ((1, -2.0), (2, 0.1), (3, 0.1))


def test_duplicate_and_out_of_range_indices():
    with pytest.raises(ValueError):
        WalshSeries(((1, 1.0), (1, 2.0)), 2)
    with pytest.raises(ValueError):
        WalshSeries(((4, 1.0),), 2)


@pytest.mark.parametrize("indices, expected", [
    (REFERENCE_19, 7), ([5], 3), ([1], 1), ([0], 1), ([], 1), ([8, 1], 4),
])
def test_required_qubits(indices, expected):
    s = WalshSeries(tuple((j, 1.0) for j in indices), 8)
    assert series.required_qubits(s) == expected


def test_partial_series_is_block_average():
    f = sampled(lambda x: x ** 2, 6)
    a = walsh.forward_wht(f)
    for k in range(7):
        approx = series.partial_series(a, k).evaluate(6)
        blocks = f.values.reshape(2 ** k, -1).mean(axis=1)
        assert np.allclose(approx, np.repeat(blocks, 2 ** (6 - k)), atol=1e-13)


def test_partial_error_monotone():
    f = sampled(lambda x: np.exp(np.sin(7 * x)), 10)
    a = walsh.forward_wht(f)
    errs = [series.reconstruction_error(series.partial_series(a, k), f) for k in range(11)]
    assert all(b <= a_ + 1e-12 for a_, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-12


def test_partial_series_dims():
    a = walsh.forward_wht(sampled(np.cos, 5))
    assert series.partial_series(a, 0).indices == [0]
    with pytest.raises(ValueError):
        series.partial_series(a, 6)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.floats(0.0, 1.0), st.integers(0, 2 ** 32 - 1))
def test_threshold_meets_budget_minimally(n, frac, seed):
    rng = np.random.default_rng(seed)
    f = SampledFunction(rng.normal(size=2 ** n))
    eps = frac * np.max(np.abs(f.values))
    s = series.threshold_series(f, eps)
    full = series.threshold_series(f, 0.0)
    # only the complete series may miss the budget, and then only by round-off
    assert series.reconstruction_error(s, f) <= eps or (len(s) == len(full) and
                                                       series.reconstruction_error(s, f) < 1e-12)
    if len(s):
        # the prefix one shorter is over budget (greedy stops at the first fit)
        shorter = WalshSeries(s.terms[:-1], n)
        assert series.reconstruction_error(shorter, f) > eps - 1e-12
    # coefficients are kept unchanged
    a = walsh.forward_wht(f).coeffs
    assert all(a[j] == c for j, c in s.terms)


def test_threshold_zero_keeps_everything_nonzero():
    f = sampled(lambda x: x, 5)
    s = series.threshold_series(f, 0.0)
    assert series.reconstruction_error(s, f) < 1e-12
    # x is a sum of Rademacher functions plus a constant
    assert sorted(s.indices) == [0, 1, 2, 4, 8, 16]


def test_threshold_negative_rejected():
    with pytest.raises(ValueError):
        series.threshold_series(sampled(np.sin, 3), -1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
def test_even_samples_have_at_most_half_the_terms(n, seed):
    rng = np.random.default_rng(seed)
    half = rng.normal(size=2 ** (n - 1))
    f = SampledFunction(np.concatenate([half, half[::-1]]))
    a = walsh.forward_wht(f).coeffs
    weights = np.array([bin(j).count("1") for j in range(2 ** n)])
    assert np.allclose(a[weights % 2 == 1], 0.0, atol=1e-12)
    assert len(series.threshold_series(f, 0.0)) <= 2 ** (n - 1)


@pytest.mark.parametrize("fn", [lambda x: x, np.cos, lambda x: 1 / np.cosh(20 * (x - 0.5))])
def test_smoothness_bound_holds(fn):
    f = sampled(fn, 10)
    a = walsh.forward_wht(f)
    for k in range(11):
        assert series.reconstruction_error(series.partial_series(a, k), f) <= series.smoothness_bound(f, k)


def test_smoothness_bound_value():
    # slope one in the unit coordinate
    f = sampled(lambda x: x, 4)
    assert series.smoothness_bound(f, 2) == pytest.approx(0.25)


def test_total_error_bound():
    b = ErrorBudget(epsilon_V=0.1, epsilon_K=0.2, delta_t=0.01, alpha=3.0)
    assert series.total_error_bound(b, 2.0) == pytest.approx(3.0 * 2.0 * 0.01 + 0.1 * 2 + 0.2 * 2)
    assert series.total_error_bound(ErrorBudget(epsilon_V=0.1), 1.0) is None
    with pytest.raises(ValueError):
        ErrorBudget(epsilon_V=-1.0)


def test_commutator_norm():
    n = 5
    assert series.commutator_norm(np.full(2 ** n, 3.0), 10.0) == pytest.approx(0.0, abs=1e-9)
    x = np.arange(2 ** n) * (10.0 / 2 ** n)
    assert series.commutator_norm(np.cos(x), 10.0) > 0.1
    with pytest.raises(ValueError):
        series.commutator_norm(np.zeros(2 ** 9), 1.0)


def test_json_round_trip(tmp_path):
    s = WalshSeries(((0, 1.5), (5, -0.1 / 3), (12, 1e-300)), 4)
    series.save_series(s, tmp_path / "s.json", achieved_error=0.01)
    back = series.load_series(tmp_path / "s.json")
    assert back == s


def test_json_rejects_inconsistent_n_required():
    text = series.series_to_json(WalshSeries(((5, 1.0),), 4)).replace('"n_required": 3', '"n_required": 2')
    with pytest.raises(ValueError):
        series.series_from_json(text)


def test_scaled_and_evaluate():
    s = WalshSeries(((0, 1.0), (1, 0.5)), 2)
    assert np.allclose(s.evaluate(2), [1.5, 1.5, 0.5, 0.5])
    assert np.allclose(s.scaled(-2.0).evaluate(1), [-3.0, -1.0])
    with pytest.raises(ValueError):
        WalshSeries(((5, 1.0),), 3).dense(2)


def test_wide_barrier_sparse_series():
    # frozen: greedy 10% series of A=1, a=0.05 on [-200, 200) with 2**13 samples
    s = eckart.illustration_series()
    assert len(s) == 19
    assert sorted(s.indices) == [0, 3, 5, 6, 9, 10, 12, 15, 17, 18, 20, 23, 24, 33, 34, 36, 39, 65, 66]
    # the reference set, up to flipping the lowest index bit
    assert sorted(j ^ 1 for j in s.indices) == REFERENCE_19
    assert s.n_required == 7


def test_json_uses_seventeen_digits():
    text = series.series_to_json(WalshSeries(((1, 0.1),), 1))
    assert '"a": 0.10000000000000001' in text

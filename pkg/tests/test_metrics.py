import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ordinal_sim.bucketing import paper_scheme
from ordinal_sim.errors import DataFormatError, InputError
from ordinal_sim.metrics import (
    EvalReport,
    confusion_matrix,
    evaluate,
    male,
    male_from_confusion,
    read_report,
    write_report,
)


def test_male_examples():
    assert male([3], [1]) == 2.0
    assert male([0, 1, 2, 3], [0, 1, 2, 3]) == 0.0
    assert male([0, 4, 2], [4, 0, 2]) == pytest.approx(8 / 3, abs=1e-15)


def test_male_errors():
    with pytest.raises(InputError):
        male([], [])
    with pytest.raises(InputError):
        male([1, 2], [1])


label_pairs = st.integers(2, 8).flatmap(
    lambda K: st.tuples(
        st.just(K),
        st.lists(st.tuples(st.integers(0, K - 1), st.integers(0, K - 1)), min_size=1, max_size=50),
    )
)


@given(label_pairs)
def test_male_properties(case):
    K, pairs = case
    actual, predicted = zip(*pairs)
    m = male(actual, predicted)
    assert 0 <= m <= K - 1
    assert (m == 0) == (list(actual) == list(predicted))
    c = confusion_matrix(actual, predicted, K)
    assert c.sum() == len(pairs)
    assert male_from_confusion(c) == pytest.approx(m, abs=1e-12)


def test_expected_random_male_by_enumeration():
    dist = [abs(i - j) for i in range(5) for j in range(5)]
    assert sum(dist) / 25 == 1.6


def test_evaluate_midpoints_diagonal():
    s = paper_scheme()
    r = evaluate(s.midpoints, s.midpoints, s)
    assert r.male == 0.0
    assert np.array_equal(r.confusion, np.eye(5, dtype=int))


def test_evaluate_constant_top_prediction():
    s = paper_scheme()
    r = evaluate([0.985] * 5, s.midpoints, s)
    assert r.male == 2.0
    assert r.hist_predicted.tolist() == [0, 0, 0, 0, 5]


def test_evaluate_clamps_out_of_range_prediction():
    r = evaluate([1.3], [0.99], paper_scheme())
    assert r.male == 0.0
    assert r.mse == pytest.approx(0.31**2)


def test_evaluate_validates_targets():
    with pytest.raises(InputError):
        evaluate([0.5], [0.0], paper_scheme())
    with pytest.raises(InputError):
        evaluate([0.5, 0.6], [0.5], paper_scheme())


def test_report_invariants_and_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    y = rng.uniform(0.01, 1, 300)
    yhat = y + rng.normal(0, 0.05, 300)
    r = evaluate(yhat, y, paper_scheme())
    assert r.confusion.sum(axis=1).tolist() == r.hist_actual.tolist()
    assert r.confusion.sum() == r.n == 300
    assert male_from_confusion(r.confusion) == pytest.approx(r.male, abs=1e-12)
    write_report(r, tmp_path / "r.txt")
    back = read_report(tmp_path / "r.txt")
    assert back.male == r.male and back.mse == r.mse
    assert np.array_equal(back.confusion, r.confusion)
    assert back.to_text() == r.to_text()


def test_report_rejects_garbage():
    with pytest.raises(DataFormatError):
        EvalReport.from_text("format = ordinal-sim-report/1\nn = x\n")
    with pytest.raises(DataFormatError):
        EvalReport.from_text("hello\n")

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from interlock.metrics import EvalReport, evaluate, mean_squared_error, r_squared, write_parity_csv

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_r2_perfect_fit():
    y = [1.0, 4.0, 2.0, 8.0]
    assert r_squared(y, y) == 1.0


def test_r2_mean_predictor():
    y = np.array([1.0, 4.0, 2.0, 8.0])
    assert r_squared(y, np.full(4, y.mean())) == 0.0


def test_r2_hand_case():
    # SS_res = 1, SS_tot = 2
    assert r_squared([1, 2, 3], [1, 2, 4]) == 0.5


def test_r2_undefined_for_constant_truth():
    with pytest.raises(ValueError, match="undefined"):
        r_squared([2, 2, 2], [1, 2, 3])


def test_mse_examples():
    assert mean_squared_error([3.0, -1.0], [3.0, -1.0]) == 0.0
    assert mean_squared_error([0, 2], [0, 0]) == 2.0
    with pytest.raises(ValueError):
        mean_squared_error([1, 2], [1])


@given(arrays(float, 12, elements=finite), arrays(float, 12, elements=finite), st.randoms())
def test_mse_symmetric_and_permutation_invariant(y, yhat, rnd):
    assert mean_squared_error(y, yhat) == pytest.approx(mean_squared_error(yhat, y))
    perm = list(range(12))
    rnd.shuffle(perm)
    assert mean_squared_error(y[perm], yhat[perm]) == pytest.approx(mean_squared_error(y, yhat))


@given(
    arrays(float, 10, elements=finite),
    arrays(float, 10, elements=st.floats(-1, 1)),
    st.floats(0.1, 50).flatmap(lambda a: st.sampled_from([a, -a])),
    st.floats(-100, 100),
)
def test_r2_affine_invariance(y, noise, a, b):
    if np.ptp(y) < 1e-3:
        return
    yhat = y + noise
    assert r_squared(a * y + b, a * yhat + b) == pytest.approx(r_squared(y, yhat), rel=1e-6, abs=1e-9)


def test_evaluate_report(tmp_path):
    y = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    yhat = np.array([[1.0, 5.0], [2.0, 5.0], [4.0, 6.0]])
    rep = evaluate(y, yhat, ["a", "b"])
    assert rep.r2 == [0.5, None]
    assert rep.mse == pytest.approx([1 / 3, 1 / 3])
    assert rep.n_samples == 3
    path = tmp_path / "eval.json"
    rep.save(path)
    assert EvalReport.load(path) == rep
    write_parity_csv(tmp_path / "a.csv", y[:, 0], yhat[:, 0], "a")
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "a_true,a_pred"

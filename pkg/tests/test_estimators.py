import numpy as np
import pytest
from sklearn.base import clone

from adarpr import RobustPhaseRetrieval, SyntheticSpec, gen_synthetic
from adarpr.objective import relative_error


@pytest.fixture(scope="module")
def data():
    p = gen_synthetic(SyntheticSpec(30, 240, 0.1, 1))
    return p, p.op.to_dense()


@pytest.mark.parametrize("algo", ["adasubgrad", "adaipl-lac", "adaipl-hac", "ipl-lac"])
def test_fit_recovers_signal(data, algo):
    p, X = data
    est = RobustPhaseRetrieval(algorithm=algo).fit(X, p.b, x_true=p.truth)
    assert est.status_ == "converged"
    assert relative_error(p, est.coef_) <= 1e-7
    assert est.n_iter_ == est.trace_.n_iter


def test_fit_without_truth(data):
    p, X = data
    est = RobustPhaseRetrieval().fit(X, p.b)
    assert est.status_ == "fixed_point"
    assert relative_error(p, est.coef_) <= 1e-10


def test_fit_with_operator_and_init(data):
    p, _ = data
    x0 = p.truth + 0.05
    est = RobustPhaseRetrieval(algorithm="adaipl-lac", init=x0).fit(p.op, p.b, x_true=p.truth)
    assert relative_error(p, est.coef_) <= 1e-7
    np.testing.assert_allclose(est.predict(p.op), (p.op.apply(est.coef_)) ** 2)


def test_predict_and_loss(data):
    p, X = data
    est = RobustPhaseRetrieval().fit(X, p.b, x_true=p.truth)
    pred = est.predict(X)
    clean = np.setdiff1d(np.arange(p.m), p.corrupted)
    np.testing.assert_allclose(pred[clean], p.b[clean], rtol=1e-5, atol=1e-6)
    assert est.robust_loss(X, p.b) == pytest.approx(np.mean(np.abs(pred - p.b)))
    with pytest.raises(ValueError):
        est.predict(X[:, :5])


def test_params_and_clone():
    est = RobustPhaseRetrieval(algorithm="gsubgrad", q=0.99)
    params = est.get_params()
    assert params["algorithm"] == "gsubgrad" and params["q"] == 0.99
    other = clone(est).set_params(q=0.9)
    assert other.q == 0.9 and est.q == 0.99


def test_unfitted_and_bad_params(data):
    p, X = data
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        RobustPhaseRetrieval().predict(X)
    with pytest.raises(ValueError):
        RobustPhaseRetrieval(algorithm="bogus").fit(X, p.b)
    with pytest.raises(ValueError):
        RobustPhaseRetrieval(max_iter=0).fit(X, p.b)
    with pytest.raises(ValueError):
        RobustPhaseRetrieval(init="random").fit(X, p.b)
    with pytest.raises(ValueError):
        RobustPhaseRetrieval().fit(X, -p.b)


def test_divergence_raises(data):
    p, X = data
    with pytest.raises(RuntimeError):
        RobustPhaseRetrieval(G=200.0, max_iter=3000).fit(X, p.b, x_true=p.truth)

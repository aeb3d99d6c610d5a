import numpy as np
import pytest

from dgsa.functions import (
    ModelFunction,
    builtin,
    fd_gradient,
    fd_gradient_batch,
    gradient_sample,
    linear_one_var,
    linear_sum,
)

UNIT_BOUNDS_1 = [(0.0, 1.0)]


def test_builtin_values():
    g = builtin("gfunction", a=[0.0])
    assert g.evaluate([0.5]) == pytest.approx(0.0)  # |4*0.5-2| = 0, a=0
    f = builtin("linear_one_var", c=2.0, g0=1.0)
    assert f.evaluate([0.75]) == pytest.approx(1.5)
    m = builtin("morris_reduced")
    assert m.evaluate([0.0, 0.0, 0.0, 0.0]) == 0.0


def test_morris_reduced_polynomial_terms():
    m = builtin("morris_reduced")
    # hand sums of the coefficient arrays
    assert m.evaluate([1, 0, 0, 0]) == pytest.approx(0.05)
    assert m.evaluate([0, 1, 0, 0]) == pytest.approx(0.59 + 30.0)
    assert m.evaluate([0, 0, 1, 0]) == pytest.approx(10.0 + 0.64)
    assert m.evaluate([0, 0, 0, 1]) == pytest.approx(0.21 + 0.06)
    assert m.evaluate([1, 1, 0, 0]) == pytest.approx(0.05 + 0.59 + 80.0 + 30.0)
    # x1=x4=1: linear + b2(1,4)+b2(4,4) pair terms + b3(1,4) triple x1*x4*x4
    assert m.evaluate([1, 0, 0, 1]) == pytest.approx(0.05 + 0.21 + 40.0 + 0.06 + 0.19)


def test_unknown_builtin():
    with pytest.raises(ValueError, match="unknown builtin"):
        builtin("nope")


def test_gfunction_validation():
    with pytest.raises(ValueError):
        builtin("gfunction", a=[-1.0])


def test_fd_gradient_linear_exact():
    f = linear_sum([3.0, -1.0])
    grad = fd_gradient(f, [0.2, 0.2], delta=1e-5, bounds=[(0, 1), (0, 1)])
    assert grad == pytest.approx([3.0, -1.0], abs=1e-8)


def test_fd_gradient_gfunction_branch():
    g = builtin("gfunction", a=[0.0])
    grad = fd_gradient(g, [0.75], delta=1e-5, bounds=UNIT_BOUNDS_1)
    assert grad[0] == pytest.approx(4.0, abs=1e-3)


def test_fd_gradient_backward_at_upper_bound():
    f = linear_one_var(c=2.0)
    grad = fd_gradient(f, [1.0], delta=1e-5, bounds=UNIT_BOUNDS_1)
    assert grad[0] == pytest.approx(2.0, abs=1e-8)
    # the evaluation point never left the support
    assert f.ledger.model_evals == 2


def test_fd_gradient_errors():
    f = linear_one_var(c=1.0)
    with pytest.raises(ValueError, match="positive"):
        fd_gradient(f, [0.5], delta=0.0, bounds=UNIT_BOUNDS_1)
    with pytest.raises(ValueError, match="support"):
        fd_gradient(f, [1.5], delta=1e-5, bounds=UNIT_BOUNDS_1)


def test_gradient_sample_fd_cost_exact():
    g = builtin("gfunction", a=[1.0] * 8)
    points = np.random.default_rng(0).random((10, 8)) * 0.9
    sample = gradient_sample(g, points, "forward_fd", 1e-5, [(0, 1)] * 8)
    assert g.ledger.model_evals == 90  # n (d + 1)
    assert sample.values is not None and sample.values.shape == (10,)
    assert sample.method == "forward_fd"


def test_gradient_sample_empty():
    g = builtin("gfunction", a=[1.0, 2.0])
    sample = gradient_sample(g, np.empty((0, 2)), "forward_fd", 1e-5, [(0, 1)] * 2)
    assert g.ledger.model_evals == 0
    assert sample.n == 0


def test_gradient_sample_linear_rows():
    b = np.array([2.0, -3.0, 0.5])
    f = linear_sum(b)
    points = np.random.default_rng(1).random((20, 3))
    sample = gradient_sample(f, points, "forward_fd", 1e-5, [(0, 1)] * 3)
    assert np.allclose(sample.grads, b, atol=1e-7)


def test_gradient_sample_analytic_mode():
    f = linear_sum([1.0, 2.0])
    points = np.random.default_rng(2).random((7, 2))
    sample = gradient_sample(f, points, "analytic")
    assert f.ledger.model_evals == 0
    assert f.ledger.gradient_evals == 7
    assert sample.values is None


def test_analytic_mode_requires_gradient():
    f = ModelFunction("plain", 1, lambda x: x[:, 0] ** 2)
    with pytest.raises(ValueError, match="no analytic gradient"):
        gradient_sample(f, np.array([[0.5]]), "analytic")


@pytest.mark.parametrize(
    "factory",
    [
        lambda: builtin("gfunction", a=[0.0, 1.0, 4.5]),
        lambda: builtin("linear_sum", b=[1.0, -2.0, 3.0]),
        lambda: builtin("linear_one_var", c=1.5, g0=0.5),
        lambda: builtin("morris_reduced"),
    ],
    ids=["gfunction", "linear_sum", "linear_one_var", "morris_reduced"],
)
def test_fd_matches_analytic_gradient(factory):
    f = factory()
    d = f.dimension
    rng = np.random.default_rng(5)
    points = rng.random((100, d))
    # keep clear of the derivative kink on every axis
    points = np.where(np.abs(points - 0.5) < 2e-3, points + 5e-3, points)
    points = np.clip(points, 1e-4, 1.0 - 1e-4)
    fd, _ = fd_gradient_batch(f, points, 1e-5, [(0.0, 1.0)] * d)
    exact = f.gradients_batch(points)
    assert np.all(np.abs(fd - exact) <= np.maximum(1e-4, 1e-4 * np.abs(exact)))


def test_ledger_counts_are_exact_per_batch():
    f = builtin("morris_reduced")
    f.evaluate_batch(np.zeros((13, 4)))
    f.evaluate([0.1, 0.2, 0.3, 0.4])
    assert f.ledger.snapshot() == (14, 0)
    f2 = f.with_fresh_ledger()
    assert f2.ledger.snapshot() == (0, 0)
    f2.evaluate_batch(np.zeros((2, 4)))
    assert f.ledger.snapshot() == (14, 0)  # original untouched


def test_from_callable_rowwise():
    f = ModelFunction.from_callable(lambda row: float(row[0] + 2 * row[1]), 2, name="cb")
    out = f.evaluate_batch(np.array([[1.0, 2.0], [0.0, 1.0]]))
    assert out == pytest.approx([5.0, 2.0])
    assert f.ledger.model_evals == 2


def test_from_callable_threaded_matches_serial(monkeypatch):
    rows = np.random.default_rng(3).random((64, 2))

    def slowish(row):
        return float(row[0] ** 2 - row[1])

    monkeypatch.setenv("SA_THREADS", "4")
    threaded = ModelFunction.from_callable(slowish, 2, parallel_safe=True)
    out_threaded = threaded.evaluate_batch(rows)
    serial = ModelFunction.from_callable(slowish, 2, parallel_safe=False)
    out_serial = serial.evaluate_batch(rows)
    assert np.array_equal(out_threaded, out_serial)
    assert threaded.ledger.model_evals == serial.ledger.model_evals == 64

import numpy as np
import pytest

from ordinal_sim import losses
from ordinal_sim.bucketing import paper_scheme
from ordinal_sim.nn import LayerSpec, forward, init_params


def finite_difference_grads(params, loss_of_params, h=1e-5):
    """Central differences of ``loss_of_params`` w.r.t. every entry of ``params.arrays()``."""
    arrays = [a.copy() for a in params.arrays()]
    grads = []
    for k, a in enumerate(arrays):
        g = np.zeros_like(a)
        for idx in np.ndindex(a.shape):
            orig = a[idx]
            a[idx] = orig + h
            up = loss_of_params(params.with_arrays(arrays))
            a[idx] = orig - h
            down = loss_of_params(params.with_arrays(arrays))
            a[idx] = orig
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric, floor=1e-8):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float((np.abs(a - n) / denom).max(initial=0.0)))
    return worst


def small_net(head, seed, dropout=(0.0, 0.0), K=5):
    """A random 4-8-4 network with the given head."""
    specs = [LayerSpec(4, 8, "relu", dropout[0]), LayerSpec(8, 4, "relu", dropout[1])]
    params = init_params(specs, head, seed=seed, n_classes=K)
    rng = np.random.default_rng(seed + 1000)
    # non-zero biases so every parameter is exercised
    arrays = [a + rng.normal(0, 0.1, a.shape) if a.ndim == 1 else a for a in params.arrays()]
    return params.with_arrays(arrays)


def loss_closure(kind, x, y, mask_seed):
    """Loss as a function of params with dropout masks replayed from ``mask_seed``."""
    scheme = paper_scheme()
    labels = scheme.labels(y)

    def run(params, with_grad=False):
        out, trace = forward(params, x, "train", np.random.default_rng(mask_seed))
        if kind == "atmsel":
            value, grad = losses.atmsel(out, labels, scheme)
        elif kind == "coral":
            value, grad = losses.coral_loss(out, labels, scheme.K)
        else:
            value, grad = losses.mse_loss(out, y)
        return (value, grad, trace) if with_grad else value

    return run


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

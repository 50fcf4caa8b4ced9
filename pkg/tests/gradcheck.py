"""Central-difference gradient check shared by the unit and acceptance tests."""
import numpy as np

FD_STEP = 1e-6


def gradient_check(net, X, Y, step=FD_STEP):
    """Largest relative gap between backprop and central differences over all parameters.

    Components with both gradients below 1e-6 are compared on an absolute
    1e-6 scale, since round-off in the difference quotient is about 1e-10.
    """
    net.loss_and_grads(X, Y)
    analytic = [g.copy() for g in net.grads()]
    worst = 0.0
    for p, g in zip(net.params(), analytic):
        flat = p.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = net.loss_and_grads(X, Y)
            flat[i] = orig - step
            down = net.loss_and_grads(X, Y)
            flat[i] = orig
            numeric = (up - down) / (2 * step)
            a = g.reshape(-1)[i]
            scale = max(abs(a), abs(numeric), 1e-6)
            worst = max(worst, abs(a - numeric) / scale)
    return worst


def toy_batch(width, rows=6, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(0, 1, (rows, width)), rng.uniform(0, 1, (rows, 9))

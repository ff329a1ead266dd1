"""Squared-loss training of one-hidden-layer networks on mu-samples."""

from dataclasses import dataclass

import numpy as np

from ..networks import CRNetwork, RNetwork, forward, forward_trace, grad_from_trace


@dataclass(frozen=True)
class MatchedPair:
    """Real width q and complex width m with equal real-parameter counts.

    ``masked`` imaginary parts of the complex net are held at zero to close
    the gap (8m+1 vs 6q+1 for d=2).
    """

    d: int
    q: int
    m: int
    masked: int

    @property
    def real_count(self):
        return (2 * self.d + 2) * self.q + 1

    @property
    def complex_count(self):
        return (2 * self.d + 4) * self.m + 1 - self.masked


def real_width_for_budget(budget, d):
    """Largest real width whose one-hidden-layer net fits in ``budget`` parameters."""
    q = (budget - 1) // (2 * d + 2)
    if q < 1:
        raise ValueError(f"budget {budget} is too small for d={d}")
    return q


def match_budget(q, d):
    """Complex width for a real one-hidden-layer net of width q with input 2d.

    Real: 2d*q weights, q biases, q output weights, 1 output bias.
    Complex: d*m weights, m biases, m output weights (2 reals each) and the
    real part of the output bias. The smallest m with at least as many
    parameters is used and the surplus imaginary parts are masked.
    """
    real = (2 * d + 2) * q
    m = -(-real // (2 * d + 4))
    masked = (2 * d + 4) * m - real
    pair = MatchedPair(d, q, m, masked)
    if pair.real_count != pair.complex_count:
        raise RuntimeError("parameter parity failed")
    return pair


def imaginary_masks(d, m, masked):
    """Boolean masks (True = imaginary part held at zero) for the complex net.

    Whole units are masked from the last one backwards: first their input
    weights, then their bias, then their output weight.
    """
    w1 = np.zeros((m, d), dtype=bool)
    b1 = np.zeros(m, dtype=bool)
    w2 = np.zeros((1, m), dtype=bool)
    left = masked
    unit = m - 1
    while left > 0:
        for k in range(d - 1, -1, -1):
            if left and not w1[unit, k]:
                w1[unit, k] = True
                left -= 1
        if left:
            b1[unit] = True
            left -= 1
        if left:
            w2[0, unit] = True
            left -= 1
        unit -= 1
    # the output bias imaginary part never reaches the output
    return (w1, w2), (b1, np.ones(1, dtype=bool))


def init_pair(pair, seed, out_scale=0.01):
    """Initial complex and real networks for a matched pair."""
    d, q, m = pair.d, pair.q, pair.m
    rng = np.random.default_rng([seed, 1])
    w1 = (rng.standard_normal((m, d)) + 1j * rng.standard_normal((m, d))) / np.sqrt(d)
    w2 = out_scale * (rng.standard_normal((1, m)) + 1j * rng.standard_normal((1, m)))
    (mw1, mw2), (mb1, _) = imaginary_masks(d, m, pair.masked)
    w1 = np.where(mw1, w1.real, w1)
    w2 = np.where(mw2, w2.real, w2)
    cr = CRNetwork([w1, w2], [np.zeros(m, dtype=complex), np.zeros(1, dtype=complex)])
    rng = np.random.default_rng([seed, 2])
    p1 = np.sqrt(2.0 / (2 * d)) * rng.standard_normal((q, 2 * d))
    p2 = out_scale * rng.standard_normal((1, q))
    r = RNetwork([p1, p2], [np.zeros(q), np.zeros(1)])
    return cr, r


def _project(grad, masks):
    if masks is None:
        return grad
    (mw1, mw2), (mb1, mb2) = masks
    ws = [np.where(mk, g.real + 0j, g) for g, mk in zip(grad.weights, (mw1, mw2))]
    bs = [np.where(mk, g.real + 0j, g) for g, mk in zip(grad.biases, (mb1, mb2))]
    return type(grad)(ws, bs)


@dataclass
class TrainResult:
    net: object
    best_loss: float
    final_lr: float
    steps: int
    rejected: int


def squared_loss(net, X, y):
    r = forward(net, X) - y
    return float(np.mean(r * r))


def train_squared(net, X, y, lr, steps, masks=None, min_lr_fraction=2.0 ** -12):
    """Full-batch gradient descent on the mean squared error.

    A step that raises the loss is rejected and the rate halved; once the
    rate reaches lr * min_lr_fraction steps are taken regardless. The best
    iterate seen is returned.
    """
    n = X.shape[0]
    trace = forward_trace(net, X)
    r = trace.out - y
    loss = float(np.mean(r * r))
    best, best_loss = net, loss
    floor = lr * min_lr_fraction
    rejected = 0
    g = None
    for _ in range(steps):
        if g is None:
            g = _project(grad_from_trace(net, trace, 2.0 * r / n), masks)
        trial = net + g.scaled(-lr)
        trial_trace = forward_trace(trial, X)
        r_new = trial_trace.out - y
        new = float(np.mean(r_new * r_new))
        if new > loss and lr > floor:
            lr *= 0.5
            rejected += 1
            continue
        if not np.isfinite(new):
            break
        net, r, loss, trace, g = trial, r_new, new, trial_trace, None
        if loss < best_loss:
            best, best_loss = net, loss
    return TrainResult(best, best_loss, lr, steps, rejected)

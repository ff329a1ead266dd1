"""Exponential loss, weight-normalized gradient flows and an RK4 integrator.

Networks here are bias-free, so the output is positively 1-homogeneous in
each layer's weights. For a layer l this gives the Euler identity
sum_j Re<W_j, dF/dW_j> = f, which ties the growth of all layer norms
together along the gradient flow.

Two right-hand sides are provided for the flow of the row scales gamma and
unit directions V (with W_j = gamma_j V_j):

``form="gradient"``
    the exact image of gradient flow dW/dt = -eta dL/dW under the
    normalization. dV/dt is tangent to the unit sphere and the loss is
    non-increasing.
``form="closed"``
    the closed form in which f(W) is replaced row by row by
    gamma_j f(V): dgamma_j/dt = (eta/gamma_j) * sum_n c_n f(V; x_n) and
    dV_j/dt = (eta/gamma_j^2) * sum_n c_n (G_j(V; x_n) - V_j f(V; x_n)),
    with c_n = exp(-y_n f(W; x_n)) y_n / N. Every row then has the same
    d(gamma_j^2)/dt. For chain networks (all hidden widths 1) it is the
    gradient form divided by the product of the gammas.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .networks import (NormalizedParams, denormalize, directions_network,
                       forward, gate_pattern, value_and_grad)

FORMS = ("gradient", "closed")
DIVERGENCE_LOSS = 1e12


@dataclass(frozen=True)
class Dataset:
    """Real inputs of length 2d (or n for real nets) with labels in {-1, +1}."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("need a non-empty 2-D input array")
        if y.shape[0] != X.shape[0]:
            raise ValueError("one label per input")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def size(self):
        return self.X.shape[0]

    @classmethod
    def random(cls, dim, size, seed=0):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((size, dim))
        y = rng.choice([-1.0, 1.0], size=size)
        return cls(X, y)


# ------------------------------------------------------------------ loss


def _margins(net, data):
    return data.y * forward(net, data.X)


def exp_loss(net, data):
    """(1/N) sum_n exp(-y_n f(x_n)), in log-sum-exp form for large negative margins."""
    m = _margins(net, data)
    if np.min(m) < -30:
        with np.errstate(over="ignore"):
            return float(np.exp(logsumexp(-m) - np.log(data.size)))
    return float(np.mean(np.exp(-m)))


def exp_loss_and_grad(net, data):
    """Loss and its gradient with respect to every parameter (a network)."""
    out = forward(net, data.X)
    e = np.exp(-data.y * out)
    _, g = value_and_grad(net, data.X, -e * data.y / data.size)
    return float(np.mean(e)), g


# ------------------------------------------------------------------ S matrix


def smatrix(v):
    """Projection S = I - v^T v onto the complement of a unit row vector v."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise ValueError("v must have unit norm")
    return np.eye(v.size) - np.outer(v, v)


def normalization_jacobian(w, step=1e-30):
    """Jacobian of w -> w/|w| by complex-step differentiation.

    The map is real-analytic, so Im(F(w + i h e_k))/h is exact to rounding
    error with no subtractive cancellation.
    """
    w = np.asarray(w, dtype=np.float64)
    n = w.size
    J = np.empty((n, n))
    for k in range(n):
        wc = w.astype(np.complex128)
        wc[k] += 1j * step
        J[:, k] = (wc / np.sqrt(np.sum(wc * wc))).imag / step
    return J


def smatrix_residuals(v, gamma):
    """Largest deviations in the four identities of S for w = gamma v.

    projection: S vs I - w^T w / |w|^2
    jacobian: dv/dw vs S / gamma
    annihilation: S w^T and S v^T vs 0
    idempotence: S^2 vs S
    """
    S = smatrix(v)
    v = np.asarray(v, dtype=np.float64).ravel()
    w = gamma * v
    proj = np.eye(v.size) - np.outer(w, w) / np.dot(w, w)
    J = normalization_jacobian(w)
    return {
        "projection": float(np.max(np.abs(S - proj))),
        "jacobian": float(np.max(np.abs(J - S / gamma))),
        "annihilation": float(max(np.max(np.abs(S @ w)) / gamma, np.max(np.abs(S @ v)))),
        "idempotence": float(np.max(np.abs(S @ S - S))),
    }


# ------------------------------------------------------------------ flow


@dataclass(frozen=True)
class FlowState:
    params: NormalizedParams
    t: float = 0.0
    step: int = 0


@dataclass(frozen=True)
class FlowDerivative:
    dgammas: tuple
    ddirections: tuple


def _row_inner(a, b):
    return np.sum(a.real * b.real + a.imag * b.imag, axis=1)


def flow_rhs(state, data, eta=1.0, form="gradient"):
    """Time derivatives of (gamma, V) for either network family."""
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    if not eta > 0:
        raise ValueError("eta must be positive")
    p = state.params
    for g in p.gammas:
        if np.any(g <= 0):
            raise ValueError("row scales must stay positive")
    W = denormalize(p)
    fW = forward(W, data.X)
    c = np.exp(-data.y * fW) * data.y / data.size
    dg, dv = [], []
    if form == "gradient":
        _, D = value_and_grad(W, data.X, c)
        for g, V, Dl in zip(p.gammas, p.directions, D.weights):
            proj = _row_inner(V, Dl)
            dg.append(eta * proj)
            dv.append((eta / g)[:, None] * (Dl - V * proj[:, None]))
    else:
        fV, GV = value_and_grad(directions_network(p), data.X, c)
        s = float(np.dot(c, fV))
        for g, V, Gl in zip(p.gammas, p.directions, GV.weights):
            dg.append(eta / g * s)
            dv.append((eta / g ** 2)[:, None] * (Gl - V * s))
    return FlowDerivative(tuple(dg), tuple(dv))


def flow_rhs_cr(state, data, eta=1.0, form="gradient"):
    """Flow of a weight-normalized complex-reaction network."""
    if state.params.family != "complex":
        raise TypeError("flow_rhs_cr needs complex parameters")
    return flow_rhs(state, data, eta, form)


def flow_rhs_r(state, data, eta=1.0, form="gradient"):
    """Flow of a weight-normalized real ReLU network."""
    if state.params.family != "real":
        raise TypeError("flow_rhs_r needs real parameters")
    return flow_rhs(state, data, eta, form)


class Flow:
    """A right-hand side bound to its data, usable with :func:`integrate`."""

    def __init__(self, data, eta=1.0, form="gradient"):
        if form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}")
        self.data = data
        self.eta = eta
        self.form = form

    def __call__(self, state):
        return flow_rhs(state, self.data, self.eta, self.form)


def unnormalized_rhs(net, data, eta=1.0):
    """dW/dt = -eta dL/dW as a network of derivatives."""
    _, g = exp_loss_and_grad(net, data)
    return g.scaled(-eta)


def tangency(state, deriv):
    """Largest |Re<V_j, dV_j/dt>| over all rows."""
    return max(float(np.max(np.abs(_row_inner(V, dV))))
               for V, dV in zip(state.params.directions, deriv.ddirections))


# ------------------------------------------------------------------ integration


def _advance(state, derivs, weights, h):
    p = state.params
    gs, vs = [], []
    for l in range(len(p.gammas)):
        g = p.gammas[l] + h * sum(w * d.dgammas[l] for w, d in zip(weights, derivs))
        v = p.directions[l] + h * sum(w * d.ddirections[l] for w, d in zip(weights, derivs))
        gs.append(g)
        vs.append(v)
    return gs, vs


def _make(state, gs, vs, t, step):
    return FlowState(NormalizedParams(tuple(gs), tuple(vs), state.params.family), t, step)


def _step(state, rhs, h, method):
    if method == "euler":
        k1 = rhs(state)
        gs, vs = _advance(state, [k1], [1.0], h)
    elif method == "rk4":
        k1 = rhs(state)
        k2 = rhs(_make(state, *_advance(state, [k1], [0.5], h), state.t + h / 2, state.step))
        k3 = rhs(_make(state, *_advance(state, [k2], [0.5], h), state.t + h / 2, state.step))
        k4 = rhs(_make(state, *_advance(state, [k3], [1.0], h), state.t + h, state.step))
        gs, vs = _advance(state, [k1, k2, k3, k4], [1 / 6, 1 / 3, 1 / 3, 1 / 6], h)
    else:
        raise ValueError(f"unknown method {method!r}")
    vs = [v / np.sqrt(np.sum(np.abs(v) ** 2, axis=1))[:, None] for v in vs]
    return _make(state, gs, vs, state.t + h, state.step + 1)


@dataclass
class FlowTrace:
    """Recorded trajectory: one entry per step, including the initial state."""

    states: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    gate_flips: list = field(default_factory=list)
    diverged: bool = False
    reason: str = ""
    rhs: object = None

    @property
    def times(self):
        return [s.t for s in self.states]

    def gammas(self):
        """Array (steps, rows) of all gammas in layer-major order."""
        return np.array([np.concatenate(s.params.gammas) for s in self.states])

    def columns(self):
        p = self.states[0].params
        names = ["t", "loss", "grad_norm", "gate_flips"]
        for l, g in enumerate(p.gammas):
            names += [f"gamma_l{l + 1}_j{j + 1}" for j in range(len(g))]
        return names

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write("# schema: crnet.flowtrace/1\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns())
        G = self.gammas()
        for k, s in enumerate(self.states):
            w.writerow([repr(float(s.t)), repr(self.losses[k]), repr(self.grad_norms[k]),
                        self.gate_flips[k]] + [repr(float(v)) for v in G[k]])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _observe(state, data):
    if data is None:
        return float("nan"), float("nan"), None
    W = denormalize(state.params)
    loss, g = exp_loss_and_grad(W, data)
    return loss, g.norm(), gate_pattern(W, data.X)


def integrate(state, rhs, h, steps, method="rk4", data=None):
    """Integrate the flow for ``steps`` steps of size ``h``.

    Direction rows are renormalized after every step. The trace stops early
    and is flagged when the loss exceeds 1e12 or a row scale turns
    non-positive.
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    if method not in ("rk4", "euler"):
        raise ValueError(f"unknown method {method!r}")
    data = data if data is not None else getattr(rhs, "data", None)
    trace = FlowTrace(rhs=rhs)
    loss, gnorm, gates = _observe(state, data)
    trace.states.append(state)
    trace.losses.append(loss)
    trace.grad_norms.append(gnorm)
    trace.gate_flips.append(0)
    for _ in range(steps):
        try:
            state = _step(state, rhs, h, method)
        except ValueError as exc:
            trace.diverged, trace.reason = True, str(exc)
            break
        loss, gnorm, new_gates = _observe(state, data)
        flips = 0 if gates is None else int(np.sum(gates != new_gates))
        gates = new_gates
        trace.states.append(state)
        trace.losses.append(loss)
        trace.grad_norms.append(gnorm)
        trace.gate_flips.append(flips)
        if data is not None and (loss > DIVERGENCE_LOSS or not np.isfinite(loss)):
            trace.diverged, trace.reason = True, f"loss {loss:.3g} above threshold"
            break
    return trace


# ------------------------------------------------------------------ growth rates


@dataclass(frozen=True)
class GrowthReport:
    """d(gamma_j^2)/dt for every row at every recorded state.

    ``spread`` is the per-step relative spread (max - min) / max|rate| over
    all rows; ``layer_spread`` the same over the per-layer sums.
    """

    rates: np.ndarray
    layer_rates: np.ndarray
    spread: np.ndarray
    layer_spread: np.ndarray
    stable: np.ndarray

    @property
    def max_spread(self):
        return float(np.max(self.spread)) if self.spread.size else 0.0

    @property
    def max_layer_spread(self):
        return float(np.max(self.layer_spread)) if self.layer_spread.size else 0.0

    def max_spread_on(self, mask):
        sel = self.spread[np.asarray(mask, dtype=bool)]
        return float(np.max(sel)) if sel.size else 0.0


def _relative_spread(a):
    scale = np.max(np.abs(a), axis=1)
    spread = np.max(a, axis=1) - np.min(a, axis=1)
    return np.where(scale > 0, spread / np.where(scale > 0, scale, 1.0), 0.0)


def growth_rate_monitor(trace, rhs=None):
    """Rates 2 gamma dgamma/dt from the analytic right-hand side along a trace."""
    rhs = rhs if rhs is not None else trace.rhs
    rates, layers = [], []
    for s in trace.states:
        der = rhs(s)
        per = [2 * g * dg for g, dg in zip(s.params.gammas, der.dgammas)]
        rates.append(np.concatenate(per))
        layers.append([float(np.sum(r)) for r in per])
    rates = np.array(rates)
    layers = np.array(layers)
    stable = np.array(trace.gate_flips) == 0
    return GrowthReport(rates, layers, _relative_spread(rates), _relative_spread(layers), stable)


# ------------------------------------------------------------------ Euler pairing


def layer_euler_pairings(net, x):
    """Per-layer sums sum_j Re<W_j, dF/dW_j> for a bias-free network and one input."""
    out, g = value_and_grad(net, x)
    pairs = [float(np.sum(w.real * gw.real + w.imag * gw.imag))
             for w, gw in zip(net.weights, g.weights)]
    return out, pairs


def row_euler_pairings(net, x):
    """Per-row pairings Re<W_j, dF/dW_j>, one array per layer."""
    out, g = value_and_grad(net, x)
    return out, [_row_inner(w, gw) for w, gw in zip(net.weights, g.weights)]

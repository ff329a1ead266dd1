"""Equioutput maps of hidden layers and probes of critical points.

A phi-move mixes two rows of a layer, theta_i <- theta_i + rho theta_j and
theta_j <- (1 - rho) theta_j, and the next layer's columns are adjusted so
that on inputs whose gates do not change the network output is unchanged.
Permutations and positive rescalings of hidden units are exact on every
input.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import exp_loss, exp_loss_and_grad
from .networks import CRNetwork, forward, gate_pattern, init_cr, init_r

# ------------------------------------------------------------------ phi-move


def phi_move(theta, rho, i, j):
    """Return a copy of ``theta`` with rows i and j mixed by ``rho``."""
    theta = np.asarray(theta)
    n = theta.shape[0]
    if i == j:
        raise ValueError("phi_move needs two different rows")
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError("row index out of range")
    dtype = np.result_type(theta, np.asarray(rho))
    out = theta.astype(dtype, copy=True)
    out[i] = rho * theta[j] + theta[i]
    out[j] = (1 - rho) * theta[j]
    return out


def affine_form(rho):
    """4x4 real matrix of phi_move acting on (Re t_i, Im t_i, Re t_j, Im t_j).

    Computed by pushing the four basis vectors through :func:`phi_move`.
    """
    M = np.zeros((4, 4))
    for k in range(4):
        e = np.zeros(4)
        e[k] = 1.0
        theta = np.array([[e[0] + 1j * e[1]], [e[2] + 1j * e[3]]])
        t = phi_move(theta, complex(rho), 0, 1)
        M[:, k] = [t[0, 0].real, t[0, 0].imag, t[1, 0].real, t[1, 0].imag]
    return M


def printed_affine(rho):
    """The reference matrices written out entry by entry.

    Real rho: identity on theta_i plus rho times theta_j, and (1 - rho) on
    theta_j. Complex rho = r1 + i r2 adds the rotation part in both blocks.
    """
    r1, r2 = float(np.real(rho)), float(np.imag(rho))
    if r2 == 0.0:
        return np.array([[1.0, 0.0, r1, 0.0],
                         [0.0, 1.0, 0.0, r1],
                         [0.0, 0.0, 1.0 - r1, 0.0],
                         [0.0, 0.0, 0.0, 1.0 - r1]])
    return np.array([[1.0, 0.0, r1, -r2],
                     [0.0, 1.0, r2, r1],
                     [0.0, 0.0, 1.0 - r1, r2],
                     [0.0, 0.0, -r2, 1.0 - r1]])


def compensator(lam, rho, i, j):
    """Adjust columns i and j of the next layer for a phi-move on rows i, j.

    Column i is kept and column j becomes (alpha_j - rho alpha_i)/(1 - rho).
    """
    if rho == 1:
        raise ValueError("the compensator is singular at rho = 1")
    lam = np.asarray(lam)
    dtype = np.result_type(lam, np.asarray(rho))
    out = lam.astype(dtype, copy=True)
    out[:, j] = (lam[:, j] - rho * lam[:, i]) / (1 - rho)
    return out


# ------------------------------------------------------------------ maps


@dataclass(frozen=True)
class EquioutputMap:
    """One move on hidden layer ``layer`` (0-based index into the weights).

    kind is "phi-move" (rows i, j and rho), "permutation" (``perm``) or
    "positive-scaling" (row i scaled by ``scale``).
    """

    kind: str
    layer: int
    i: int = 0
    j: int = 1
    rho: complex = 0.0
    perm: tuple = ()
    scale: float = 1.0

    def apply(self, net):
        if self.kind == "phi-move":
            return apply_phi_move(net, self.layer, self.rho, self.i, self.j)
        if self.kind == "permutation":
            return exact_equioutput_permutation(net, self.layer, self.perm)
        if self.kind == "positive-scaling":
            return exact_equioutput_scaling(net, self.layer, self.i, self.scale)
        raise ValueError(f"unknown map kind {self.kind!r}")


def _check_hidden(net, l):
    if not 0 <= l < net.depth - 1:
        raise IndexError(f"layer {l} is not a hidden layer")


def _as_family(net, arrays):
    if net.family == "real":
        for a in arrays:
            if np.iscomplexobj(a) and np.any(a.imag != 0):
                raise ValueError("complex rho on a real network")
        return [np.real(a) for a in arrays]
    return arrays


def apply_phi_move(net, l, rho, i, j):
    """phi-move on layer l together with the compensator on layer l + 1."""
    _check_hidden(net, l)
    ws = list(net.weights)
    ws[l] = phi_move(ws[l], rho, i, j)
    ws[l + 1] = compensator(ws[l + 1], rho, i, j)
    bs = None
    if net.biases is not None:
        bs = list(net.biases)
        bs[l] = phi_move(bs[l][:, None], rho, i, j)[:, 0]
    ws = _as_family(net, ws)
    if bs is not None:
        bs = _as_family(net, bs)
    return type(net)(ws, bs)


def exact_equioutput_permutation(net, l, perm):
    """Reorder the units of hidden layer l; new unit k is old unit perm[k]."""
    _check_hidden(net, l)
    perm = np.asarray(perm, dtype=int)
    if sorted(perm.tolist()) != list(range(net.weights[l].shape[0])):
        raise ValueError("not a permutation of the layer's units")
    ws = list(net.weights)
    ws[l] = ws[l][perm]
    ws[l + 1] = ws[l + 1][:, perm]
    bs = None
    if net.biases is not None:
        bs = list(net.biases)
        bs[l] = bs[l][perm]
    return type(net)(ws, bs)


def exact_equioutput_scaling(net, l, j, c):
    """Scale unit j of hidden layer l by c > 0 and its outgoing weights by 1/c."""
    if not c > 0:
        raise ValueError("scaling factor must be positive")
    return _scale_unit(net, l, j, c)


def sign_flip(net, l, j):
    """Negate unit j of layer l and its outgoing weights.

    Output-preserving only for odd activations; used by the census.
    """
    return _scale_unit(net, l, j, -1.0)


def _scale_unit(net, l, j, c):
    _check_hidden(net, l)
    ws = [w.copy() for w in net.weights]
    ws[l][j] *= c
    ws[l + 1][:, j] /= c
    bs = None
    if net.biases is not None:
        bs = [b.copy() for b in net.biases]
        bs[l][j] *= c
    return type(net)(ws, bs)


def gate_stable(net, l, i, j, rho, X):
    """Inputs on which a phi-move (with compensator) provably preserves the output.

    The gates of units i and j before the move and after it must all agree,
    so the two units act linearly and identically on the input.
    """
    before = _layer_gates(net, l, X)
    after = _layer_gates(apply_phi_move(net, l, rho, i, j), l, X)
    g = [before[:, i], before[:, j], after[:, i], after[:, j]]
    return (g[0] == g[1]) & (g[0] == g[2]) & (g[0] == g[3])


def _layer_gates(net, l, X):
    pat = gate_pattern(net, X)
    start = sum(w.shape[0] for w in net.weights[:l])
    return pat[:, start:start + net.weights[l].shape[0]]


# ------------------------------------------------------------------ critical points


@dataclass(frozen=True)
class CriticalPointReport:
    before_norm: float
    after_norm: float
    rho: complex
    stable_fraction: float
    loss_before: float
    loss_after: float
    verdict: str


def critical_point_probe(net, emap, data, g0=1e-6, real_factor=10.0, separation=100.0,
                         min_imag=0.25):
    """Gradient norms of the exponential loss before and after a map.

    Verdicts: for real rho, "remains-critical" when the new norm is below
    real_factor * g0; for |Im rho| >= min_imag, "leaves-critical" when it
    exceeds separation * g0; otherwise the observed class or "undetermined"
    for small imaginary parts.
    """
    loss0, g_before = exp_loss_and_grad(net, data)
    moved = emap.apply(net)
    loss1, g_after = exp_loss_and_grad(moved, data)
    b, a = g_before.norm(), g_after.norm()
    rho = complex(emap.rho)
    if emap.kind == "phi-move":
        stable = float(np.mean(gate_stable(net, emap.layer, emap.i, emap.j, emap.rho, data.X)))
    else:
        stable = 1.0
    if rho.imag == 0:
        verdict = "remains-critical" if a < real_factor * g0 else "leaves-critical"
    elif abs(rho.imag) >= min_imag:
        verdict = "leaves-critical" if a > separation * g0 else "remains-critical"
    else:
        verdict = "undetermined"
    return CriticalPointReport(b, a, rho, stable, loss0, loss1, verdict)


def split_unit(net, k, fraction=0.5):
    """Duplicate hidden unit k of a one-hidden-layer net.

    The copy gets the same incoming row; the outgoing weight is shared as
    fraction and 1 - fraction. The function is unchanged, and a critical
    point of the smaller net maps to a critical point of the larger one.
    Returns the new net and the indices (k, k_new) of the pair.
    """
    if net.depth != 2:
        raise ValueError("split_unit expects a one-hidden-layer network")
    w1, w2 = net.weights
    w1 = np.vstack([w1, w1[k:k + 1]])
    w2 = np.hstack([w2, fraction * w2[:, k:k + 1]]).copy()
    w2[:, k] *= (1 - fraction)
    return type(net)([w1, w2]), (k, w1.shape[0] - 1)


# ------------------------------------------------------------------ census


@dataclass(frozen=True)
class SymmetryGroupCensus:
    """Counts of exact output-preserving unit maps per hidden layer.

    For layer l: ``permutations`` passing out of n!, ``sign_flips`` passing
    out of 2^n, ``combined`` passing signed permutations out of n! 2^n.
    """

    family: str
    widths: tuple
    permutations: tuple
    sign_flips: tuple
    combined: tuple

    @property
    def bounds(self):
        return tuple(math.factorial(n) * 2 ** n for n in self.widths)

    @property
    def within_bound(self):
        return all(c <= b for c, b in zip(self.combined, self.bounds))


def _signed_permutation(net, l, perm, signs):
    out = exact_equioutput_permutation(net, l, perm)
    for u, s in enumerate(signs):
        if s < 0:
            out = sign_flip(out, l, u)
    return out


def group_census(widths, family="complex", d=2, inputs=256, seed=0, cap=4, tol=1e-12):
    """Exhaustively test signed permutations of every hidden layer.

    A candidate counts when outputs agree to ``tol`` (relative to the
    output scale) on random inputs.
    """
    widths = tuple(int(n) for n in widths)
    if any(n < 1 for n in widths):
        raise ValueError("widths must be positive")
    if any(n > cap for n in widths):
        raise ValueError(f"census enumerates widths up to {cap}")
    layers = [d] + list(widths) + [1]
    if family == "complex":
        net = init_cr(layers, seed)
        dim = 2 * d
    else:
        net = init_r([2 * d] + layers[1:], seed)
        dim = 2 * d
    X = np.random.default_rng(seed + 1).standard_normal((inputs, dim))
    ref = forward(net, X)
    scale = max(1.0, float(np.max(np.abs(ref))))
    perms, flips, combined = [], [], []
    for l, n in enumerate(widths):
        p = f = c = 0
        identity = tuple(range(n))
        for perm in itertools.permutations(range(n)):
            for signs in itertools.product((1, -1), repeat=n):
                moved = _signed_permutation(net, l, perm, signs)
                ok = float(np.max(np.abs(forward(moved, X) - ref))) <= tol * scale
                c += ok
                if all(s > 0 for s in signs):
                    p += ok
                if perm == identity:
                    f += ok
        perms.append(p)
        flips.append(f)
        combined.append(c)
    return SymmetryGroupCensus(family, widths, tuple(perms), tuple(flips), tuple(combined))


def output_change(net, moved, X):
    """Max |f(moved) - f(net)| over the rows of X."""
    return float(np.max(np.abs(forward(moved, X) - forward(net, X))))


def loss_change(net, moved, data):
    return abs(exp_loss(moved, data) - exp_loss(net, data))


def is_complex(net):
    return isinstance(net, CRNetwork)


def interpolating_critical_point(family="complex", d=2, distinct=24, width=None, seed=0,
                                 max_copies=3):
    """A one-hidden-layer network at an exact critical point of the exponential loss.

    Each of ``distinct`` random inputs is repeated with a copies of label +1
    and b copies of label -1, so its loss terms are minimized exactly when
    the output equals log(a/b)/2. Hidden rows are drawn at random and the
    output weights solve the resulting linear interpolation problem, which
    needs at least ``distinct`` real output parameters. Every loss gradient
    then vanishes up to rounding. One hidden unit is finally split into a
    duplicate pair (units 0 and the last one), the configuration on which
    real phi-moves keep every gate.

    Returns (network, dataset, (i, j)).
    """
    from .ctensor import kept as _kept
    from .dynamics import Dataset
    from .networks import RNetwork, embed

    rng = np.random.default_rng([seed, 7])
    dim = 2 * d
    P = rng.standard_normal((distinct, dim))
    a = rng.integers(1, max_copies + 1, distinct)
    b = rng.integers(1, max_copies + 1, distinct)
    targets = 0.5 * np.log(a / b)
    X = np.repeat(P, a + b, axis=0)
    y = np.concatenate([np.r_[np.ones(ai), -np.ones(bi)] for ai, bi in zip(a, b)])
    if family == "complex":
        width = width or distinct // 2 + 3
        w1 = (rng.standard_normal((width, d)) + 1j * rng.standard_normal((width, d))) / np.sqrt(d)
        U = embed(P) @ w1.T
        H = np.where(_kept(U), U, 0)
        A = np.hstack([H.real, -H.imag])
        sol = np.linalg.lstsq(A, targets, rcond=None)[0]
        net = CRNetwork([w1, (sol[:width] + 1j * sol[width:])[None, :]])
    elif family == "real":
        width = width or distinct + 4
        w1 = np.sqrt(2.0 / dim) * rng.standard_normal((width, dim))
        H = np.maximum(P @ w1.T, 0.0)
        sol = np.linalg.lstsq(H, targets, rcond=None)[0]
        net = RNetwork([w1, sol[None, :]])
    else:
        raise ValueError(f"unknown family {family!r}")
    net, pair = split_unit(net, 0)
    return net, Dataset(X, y), pair

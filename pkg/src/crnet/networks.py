"""Network containers, forward passes and exact manual gradients.

Two families share one layout: a tuple of weight matrices (layer l maps
width n_{l-1} to n_l) plus optional per-layer bias vectors. The last layer
has a single row and is read out linearly.

* ``CRNetwork``: complex weights, zReLU between layers, the real part of the
  final linear layer is the output. Real inputs of length 2d are embedded as
  z_k = x_k + i x_{k+d}.
* ``RNetwork``: real weights and ReLU.

Gradients use the convention G = df/d(Re W) + i df/d(Im W) for complex
parameters, so a first-order change is df = Re(sum(conj(G) * dW)).
"""

import json
from dataclasses import dataclass

import numpy as np

from .ctensor import kept, real_inner

CHECKPOINT_FORMAT = "crnet-network"
CHECKPOINT_VERSION = 1


def embed(x):
    """Map real vectors of length 2d to complex vectors of length d.

    Works on a single vector or on the rows of a 2-D array.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] % 2:
        raise ValueError(f"embedding needs an even input length, got {x.shape[-1]}")
    d = x.shape[-1] // 2
    return x[..., :d] + 1j * x[..., d:]


def unembed(z):
    """Inverse of :func:`embed`."""
    z = np.asarray(z, dtype=np.complex128)
    return np.concatenate([z.real, z.imag], axis=-1)


class _Layered:
    family = None
    dtype = None

    def __init__(self, weights, biases=None):
        ws = tuple(np.array(w, dtype=self.dtype, copy=True) for w in weights)
        if len(ws) < 1:
            raise ValueError("a network needs at least one layer")
        for l, w in enumerate(ws):
            if w.ndim != 2:
                raise ValueError(f"layer {l} is not a matrix")
            if l and w.shape[1] != ws[l - 1].shape[0]:
                raise ValueError(
                    f"layer {l} expects width {w.shape[1]}, previous layer gives {ws[l - 1].shape[0]}")
        if ws[-1].shape[0] != 1:
            raise ValueError("output layer must have a single row")
        bs = None
        if biases is not None:
            if len(biases) != len(ws):
                raise ValueError("need one bias vector per layer")
            bs = tuple(np.zeros(w.shape[0], dtype=self.dtype) if b is None
                       else np.array(b, dtype=self.dtype, copy=True).reshape(w.shape[0])
                       for w, b in zip(ws, biases))
        for a in ws + (bs or ()):
            a.setflags(write=False)
        self.weights = ws
        self.biases = bs

    @property
    def depth(self):
        return len(self.weights)

    @property
    def widths(self):
        """Layer widths, input first: [n_0, n_1, ..., 1]."""
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def hidden_units(self):
        return sum(w.shape[0] for w in self.weights[:-1])

    def parameter_count(self):
        """Number of real parameters."""
        per = 2 if self.family == "complex" else 1
        n = sum(w.size for w in self.weights)
        if self.biases is not None:
            n += sum(b.size for b in self.biases)
        return per * n

    def replace(self, weights=None, biases=None):
        return type(self)(self.weights if weights is None else weights,
                          self.biases if biases is None else biases)

    def scaled(self, c):
        """Network with every parameter multiplied by ``c`` (gradient arithmetic)."""
        return type(self)([c * w for w in self.weights],
                          None if self.biases is None else [c * b for b in self.biases])

    def __add__(self, other):
        bs = None
        if self.biases is not None:
            bs = [a + b for a, b in zip(self.biases, other.biases)]
        return type(self)([a + b for a, b in zip(self.weights, other.weights)], bs)

    def inner(self, other):
        """Real inner product over all parameters."""
        s = sum(real_inner(a, b) for a, b in zip(self.weights, other.weights))
        if self.biases is not None and other.biases is not None:
            s += sum(real_inner(a, b) for a, b in zip(self.biases, other.biases))
        return s

    def norm(self):
        return float(np.sqrt(self.inner(self)))

    def __repr__(self):
        return f"{type(self).__name__}(widths={self.widths}, bias={self.biases is not None})"


class CRNetwork(_Layered):
    """Complex-reaction network: complex layers, zReLU, real-part readout."""

    family = "complex"
    dtype = np.complex128

    @property
    def input_dim(self):
        """Real input length 2d."""
        return 2 * self.weights[0].shape[1]


class RNetwork(_Layered):
    """Real feed-forward ReLU network."""

    family = "real"
    dtype = np.float64

    @property
    def input_dim(self):
        return self.weights[0].shape[1]


def _inputs(net, x):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise ValueError(f"input of shape {x.shape} does not match input length {net.input_dim}")
    H = embed(X) if net.family == "complex" else X
    return H, single


def _gate(net, p):
    if net.family == "complex":
        return kept(p)
    return p > 0


def _forward_pass(net, H):
    """Return pre-activations, post-activations and gates of every layer."""
    pres, acts, gates = [], [H], []
    h = H
    last = net.depth - 1
    for l, w in enumerate(net.weights):
        p = h @ w.T
        if net.biases is not None:
            p = p + net.biases[l]
        pres.append(p)
        if l < last:
            g = _gate(net, p)
            h = np.where(g, p, 0)
            gates.append(g)
            acts.append(h)
    return pres, acts, gates


def _evaluate(net, x):
    H, single = _inputs(net, x)
    pres, _, _ = _forward_pass(net, H)
    out = pres[-1][:, 0].real.copy()
    return float(out[0]) if single else out


def forward_cr(net, x):
    """Output of a complex-reaction network on one input or a batch of rows."""
    if net.family != "complex":
        raise TypeError("forward_cr needs a CRNetwork")
    return _evaluate(net, x)


def forward_r(net, x):
    """Output of a real ReLU network on one input or a batch of rows."""
    if net.family != "real":
        raise TypeError("forward_r needs an RNetwork")
    return _evaluate(net, x)


def forward(net, x):
    """Output of either family."""
    return _evaluate(net, x)


def gate_pattern(net, x):
    """Boolean activation pattern, shape (samples, hidden units)."""
    H, _ = _inputs(net, x)
    _, _, gates = _forward_pass(net, H)
    if not gates:
        return np.zeros((H.shape[0], 0), dtype=bool)
    return np.concatenate(gates, axis=1)


class ForwardTrace:
    """Cached forward pass over a batch, reusable for gradients."""

    def __init__(self, net, x):
        H, self.single = _inputs(net, x)
        self.pres, self.acts, self.gates = _forward_pass(net, H)
        self.out = self.pres[-1][:, 0].real.copy()


def forward_trace(net, x):
    """Forward pass that keeps what :func:`grad_from_trace` needs."""
    return ForwardTrace(net, x)


def grad_from_trace(net, trace, cotangent=None, conjugate=True):
    """Gradient of sum_n cotangent_n * f(x_n) from a cached forward pass."""
    n = trace.acts[0].shape[0]
    c = np.ones(n) if cotangent is None else np.asarray(cotangent, dtype=np.float64).reshape(n)
    gp = c[:, None].astype(net.dtype)
    gws = [None] * net.depth
    gbs = [None] * net.depth
    for l in range(net.depth - 1, -1, -1):
        h = trace.acts[l]
        gws[l] = gp.T @ (np.conj(h) if conjugate else h)
        gbs[l] = gp.sum(axis=0)
        if l:
            gp = np.where(trace.gates[l - 1], gp @ np.conj(net.weights[l]), 0)
    return type(net)(gws, gbs if net.biases is not None else None)


def _backward(net, x, cotangent, conjugate=True):
    trace = ForwardTrace(net, x)
    grad = grad_from_trace(net, trace, cotangent, conjugate)
    out = trace.out
    return grad, (float(out[0]) if trace.single else out)


def grad_cr(net, x, cotangent=None):
    """Gradient of the real output with respect to every complex parameter.

    For a single input the gradient of f(x) is returned; for a batch of
    rows, the gradient of sum_n cotangent_n * f(x_n) (cotangent defaults to
    ones). The result is a ``CRNetwork`` of the same shapes whose entries are
    df/d(Re W) + i df/d(Im W).
    """
    if net.family != "complex":
        raise TypeError("grad_cr needs a CRNetwork")
    return _backward(net, x, cotangent)[0]


def grad_r(net, x, cotangent=None):
    """Gradient of a real network's output, same batching rules as grad_cr."""
    if net.family != "real":
        raise TypeError("grad_r needs an RNetwork")
    return _backward(net, x, cotangent)[0]


def value_and_grad(net, x, cotangent=None):
    """(outputs, gradient) for either family in one pass."""
    grad, out = _backward(net, x, cotangent)
    return out, grad


def antilinear_grad_cr(net, x, cotangent=None):
    """Gradient component that a complex-linear layer cannot express.

    Viewing every complex weight as an unconstrained real 2x2 block, the
    block gradient splits into the complex-linear part returned by
    :func:`grad_cr` and this anti-linear part. The realified network is
    stationary in all block entries only when both parts vanish.
    """
    if net.family != "complex":
        raise TypeError("antilinear_grad_cr needs a CRNetwork")
    return _backward(net, x, cotangent, conjugate=False)[0]


def init_cr(widths, seed=0, bias=False):
    """Random complex-reaction network.

    ``widths`` lists layer sizes from the complex input dimension d to the
    single output. Real and imaginary parts are independent N(0, 1/fan_in).
    """
    rng = np.random.default_rng(seed)
    ws, bs = [], []
    for a, b in zip(widths[:-1], widths[1:]):
        s = 1.0 / np.sqrt(a)
        ws.append(s * (rng.standard_normal((b, a)) + 1j * rng.standard_normal((b, a))))
        bs.append(np.zeros(b, dtype=complex))
    return CRNetwork(ws, bs if bias else None)


def init_r(widths, seed=0, bias=False):
    """Random real ReLU network with He-style N(0, 2/fan_in) weights."""
    rng = np.random.default_rng(seed)
    ws, bs = [], []
    for a, b in zip(widths[:-1], widths[1:]):
        ws.append(np.sqrt(2.0 / a) * rng.standard_normal((b, a)))
        bs.append(np.zeros(b))
    return RNetwork(ws, bs if bias else None)


# ---------------------------------------------------------------- flat vectors

def to_vector(net):
    """All parameters as one real vector (weights then biases, layer by layer)."""
    parts = []
    arrays = list(net.weights) + list(net.biases or ())
    for a in arrays:
        if net.family == "complex":
            parts += [a.real.ravel(), a.imag.ravel()]
        else:
            parts.append(a.ravel())
    return np.concatenate(parts)


def from_vector(template, v):
    """Inverse of :func:`to_vector` using ``template`` for the shapes."""
    v = np.asarray(v, dtype=np.float64)
    arrays = list(template.weights) + list(template.biases or ())
    out, k = [], 0
    for a in arrays:
        n = a.size
        if template.family == "complex":
            out.append((v[k:k + n] + 1j * v[k + n:k + 2 * n]).reshape(a.shape))
            k += 2 * n
        else:
            out.append(v[k:k + n].reshape(a.shape))
            k += n
    if k != v.size:
        raise ValueError(f"vector length {v.size} does not match {k} parameters")
    L = template.depth
    return type(template)(out[:L], out[L:] if template.biases is not None else None)


# ------------------------------------------------------------ weight normalization

@dataclass(frozen=True)
class NormalizedParams:
    """Row-wise weight normalization W_j = gamma_j * V_j of a bias-free network.

    ``gammas[l]`` holds the positive row scales of layer l and
    ``directions[l]`` the unit-norm rows.
    """

    gammas: tuple
    directions: tuple
    family: str

    def __post_init__(self):
        for g in self.gammas:
            if np.any(np.asarray(g) <= 0):
                raise ValueError("row scales must be positive")

    @property
    def n_rows(self):
        return sum(len(g) for g in self.gammas)


def normalize(net):
    """Split every row of every layer into (scale, unit direction)."""
    if net.biases is not None and any(np.any(b != 0) for b in net.biases):
        raise ValueError("weight normalization is defined for bias-free networks")
    gammas, dirs = [], []
    for l, w in enumerate(net.weights):
        g = np.sqrt(np.sum(np.abs(w) ** 2, axis=1))
        if np.any(g == 0):
            raise ValueError(f"layer {l} has a zero row")
        gammas.append(g)
        dirs.append(w / g[:, None])
    return NormalizedParams(tuple(gammas), tuple(dirs), net.family)


def denormalize(params):
    """Rebuild the raw network from a :class:`NormalizedParams`."""
    cls = CRNetwork if params.family == "complex" else RNetwork
    return cls([g[:, None] * v for g, v in zip(params.gammas, params.directions)])


def directions_network(params):
    """The network whose layers are the unit directions only."""
    cls = CRNetwork if params.family == "complex" else RNetwork
    return cls(params.directions)


# ------------------------------------------------------------ parameter matching

@dataclass(frozen=True)
class LayerPlan:
    """Complex layer matching the real-parameter count of a real p x q layer.

    ``imag_mask`` marks entries whose imaginary part is held at zero.
    """

    p: int
    q: int
    rows: int
    cols: int
    imag_mask: np.ndarray
    case: str

    @property
    def real_parameter_count(self):
        return 2 * self.rows * self.cols - int(self.imag_mask.sum())


def match_parameter_structure(p, q):
    """Complex layer plan whose real-parameter count equals p*q.

    q even: p x q/2. q odd, p even: p/2 x q. Both odd: (p+1)/2 x q with the
    imaginary parts of the last row held at zero.
    """
    if p < 1 or q < 1:
        raise ValueError("p and q must be positive")
    if q % 2 == 0:
        rows, cols, case = p, q // 2, "q-even"
        mask = np.zeros((rows, cols), dtype=bool)
    elif p % 2 == 0:
        rows, cols, case = p // 2, q, "p-even"
        mask = np.zeros((rows, cols), dtype=bool)
    else:
        rows, cols, case = (p + 1) // 2, q, "both-odd"
        mask = np.zeros((rows, cols), dtype=bool)
        mask[-1, :] = True
    return LayerPlan(p, q, rows, cols, mask, case)


# ------------------------------------------------------------------ checkpoints

def _pairs(a):
    a = np.asarray(a).ravel()
    return [[float(v.real), float(v.imag)] for v in a.astype(np.complex128)]


def network_to_json(net):
    """Serialize to the JSON checkpoint format.

    Each layer stores its shape and row-major (re, im) pairs. Floats are
    written with Python's shortest round-tripping repr (at most 17
    significant digits), so loading reproduces every bit.
    """
    layers = []
    for l, w in enumerate(net.weights):
        layers.append({
            "shape": list(w.shape),
            "weights": _pairs(w),
            "bias": None if net.biases is None else _pairs(net.biases[l]),
        })
    doc = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION,
           "family": net.family, "layers": layers}
    return json.dumps(doc)


def network_from_json(text):
    doc = json.loads(text)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError("not a network checkpoint")
    cls = {"complex": CRNetwork, "real": RNetwork}[doc["family"]]
    ws, bs = [], []
    for layer in doc["layers"]:
        a = np.array(layer["weights"], dtype=np.float64).reshape(-1, 2)
        w = (a[:, 0] + 1j * a[:, 1]).reshape(layer["shape"])
        ws.append(w if cls is CRNetwork else w.real)
        if layer["bias"] is not None:
            b = np.array(layer["bias"], dtype=np.float64).reshape(-1, 2)
            b = b[:, 0] + 1j * b[:, 1]
            bs.append(b if cls is CRNetwork else b.real)
    return cls(ws, bs if bs else None)


def save_network(net, path):
    with open(path, "w") as fh:
        fh.write(network_to_json(net))


def load_network(path):
    with open(path) as fh:
        return network_from_json(fh.read())


# ------------------------------------------------------------------ diagnostics

def numerical_gradient(net, x, step=1e-6):
    """Central finite-difference gradient of f(x) over every real parameter."""
    v = to_vector(net)
    g = np.empty_like(v)
    for k in range(v.size):
        vp = v.copy()
        vm = v.copy()
        vp[k] += step
        vm[k] -= step
        g[k] = (_evaluate(from_vector(net, vp), x) - _evaluate(from_vector(net, vm), x)) / (2 * step)
    return from_vector(net, g)


def gate_margin(net, x):
    """Distance of the hidden pre-activations from their gate boundaries.

    For complex nets the smaller of |Re p| and |Im p| relative to |p|, for
    real nets |p| itself; minimized over hidden units.
    """
    H, _ = _inputs(net, np.asarray(x)[None, :] if np.ndim(x) == 1 else x)
    pres, _, _ = _forward_pass(net, H)
    if len(pres) == 1:
        return np.inf
    p = np.concatenate(pres[:-1], axis=1)
    if net.family == "complex":
        m = np.minimum(np.abs(p.real), np.abs(p.imag)) / np.maximum(np.abs(p), 1e-300)
    else:
        m = np.abs(p)
    return float(np.min(m))

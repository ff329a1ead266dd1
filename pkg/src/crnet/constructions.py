"""Explicit approximators: one-hidden-layer ReLU interpolants in 1-D and a
complex-reaction network approximating radial functions.

The radial network is assembled from four stages, each a layer of a
``CRNetwork`` with biases:

1. a modulus gadget: every complex coordinate z_j is multiplied by m phases
   e^{i phi_k}; after zReLU, a unit is kept only when the rotated value lies
   in a kept quarter plane, and its projection onto the quarter-plane
   bisector is |z_j| cos(offset);
2. absolute values of those projections, via real ReLU units realised
   inside zReLU: with a large positive imaginary bias iC, zReLU(t + iC)
   keeps exactly when t >= 0, so its real part is relu(t);
3. a 1-D ReLU interpolant of t -> t^2 applied to every estimated modulus;
4. a 1-D ReLU interpolant of s -> g(sqrt(s)) applied to the sum of squares.

Stages 3 and 4 reuse the same imaginary-bias trick. Their incoming weights
are nonnegative, and every imaginary part entering them is nonnegative, so
a unit imaginary bias keeps every gate in its real-ReLU regime.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .ctensor import kept
from .networks import CRNetwork, RNetwork, embed, forward_cr


class BudgetExceeded(RuntimeError):
    """A construction needs more units than its width budget allows."""

    def __init__(self, message, width, budget, achieved_error):
        super().__init__(message)
        self.width = width
        self.budget = budget
        self.achieved_error = achieved_error


# ------------------------------------------------------------------ 1-D ReLU


@dataclass(frozen=True)
class Ridge1DApproximator:
    """x -> sum_i alpha_i relu(beta_i x - b_i) - a."""

    alphas: np.ndarray
    betas: np.ndarray
    offsets: np.ndarray
    a: float
    domain: tuple
    budget: int

    @property
    def width(self):
        return int(len(self.alphas))

    @property
    def knots(self):
        return self.offsets / self.betas

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        h = np.maximum(np.multiply.outer(x, self.betas) - self.offsets, 0.0)
        return h @ self.alphas - self.a

    def to_network(self):
        """The same function as a one-hidden-layer ``RNetwork`` with biases."""
        w1 = self.betas[:, None]
        w2 = self.alphas[None, :]
        return RNetwork([w1, w2], [-self.offsets, np.array([-self.a])])


def lemma2_budget(L, R, delta, C_r=1.0):
    """Width budget ceil(2 C_r L R / delta) for a one-hidden-layer ReLU net."""
    return int(np.ceil(2 * C_r * L * R / delta))


def interpolant(f, knots, budget=None, slope_tol=1e-12, clamp=False):
    """ReLU form of the piecewise-linear interpolant of ``f`` at ``knots``.

    Knots where the slope does not change are dropped, so a linear ``f``
    uses a single unit and a constant uses none. Left of the first knot the
    result is constant; with ``clamp`` it is constant right of the last
    knot too (one extra unit), otherwise the last slope continues.
    """
    t = np.asarray(knots, dtype=np.float64)
    v = np.array([f(s) for s in t], dtype=np.float64)
    slopes = np.diff(v) / np.diff(t)
    changes = np.concatenate([[slopes[0]], np.diff(slopes)])
    starts = t[:-1]
    if clamp:
        changes = np.append(changes, -slopes[-1])
        starts = t
    scale = max(1.0, float(np.max(np.abs(slopes))))
    keep = np.abs(changes) > slope_tol * scale
    alphas = changes[keep]
    budget = len(t) - 1 if budget is None else budget
    return Ridge1DApproximator(alphas, np.ones_like(alphas), starts[keep], -float(v[0]),
                               (float(t[0]), float(t[-1])), budget)


def build_1d_relu(f, L, R, delta, domain=None, C_r=1.0, max_width=100_000):
    """Piecewise-linear interpolant of ``f`` with sup error at most ``delta``.

    Knots are spaced at most 2*delta/L apart over ``domain`` (default
    [-R, R]), so an L-Lipschitz ``f`` is matched within delta.
    """
    if not (L > 0 and R > 0 and delta > 0):
        raise ValueError("L, R and delta must be positive")
    lo, hi = (-R, R) if domain is None else (float(domain[0]), float(domain[1]))
    if not hi > lo:
        raise ValueError("empty domain")
    segments = max(1, int(np.ceil((hi - lo) * L / (2 * delta))))
    if segments > max_width:
        raise ValueError(f"delta={delta} needs {segments} units, above the cap {max_width}")
    budget = lemma2_budget(L, 0.5 * (hi - lo), delta, C_r)
    return interpolant(f, np.linspace(lo, hi, segments + 1), budget)


def sup_error_1d(approx, f, points=10_000):
    """Max |f - approx| over a uniform grid plus the knots."""
    lo, hi = approx.domain
    x = np.unique(np.concatenate([np.linspace(lo, hi, points), approx.knots]))
    fx = np.array([f(s) for s in x], dtype=np.float64)
    return float(np.max(np.abs(fx - approx(x))))


# ------------------------------------------------------------------ modulus gadget


def sector_phases(m_sec):
    """Rotation phases of the gadget units.

    Units are spaced pi/m apart; the offset makes the m/2 units kept on the
    positive real axis symmetric about the quarter-plane bisector, so that
    direction is reproduced exactly.
    """
    if m_sec < 2 or m_sec % 2:
        raise ValueError("m_sec must be an even integer >= 2")
    half = m_sec // 2
    return np.pi / 4 - (half - 1) * np.pi / (2 * m_sec) + np.pi * np.arange(m_sec) / m_sec


def sector_normalizer(m_sec):
    """Sum of the kept projections for a unit vector on the positive real axis."""
    return np.sin(np.pi / 4) / np.sin(np.pi / (2 * m_sec))


def gadget_relative_error(m_sec):
    """Worst relative underestimate of |z| by the gadget: 1 - cos(pi/(2m))."""
    return 1.0 - np.cos(np.pi / (2 * m_sec))


@dataclass(frozen=True)
class ModulusGadget:
    """Two complex layers estimating |z_j| for each of d complex coordinates.

    ``layers`` and ``biases`` are the first two layers of the radial network;
    ``readout`` (d x 2dm, real) sums the real parts of the second layer into
    the modulus estimates.
    """

    d: int
    m_sec: int
    gate_bound: float
    layers: tuple = field(repr=False)
    biases: tuple = field(repr=False)
    readout: np.ndarray = field(repr=False)

    @property
    def width(self):
        return sum(w.shape[0] for w in self.layers)

    def hidden(self, Z):
        h = Z
        for w, b in zip(self.layers, self.biases):
            p = h @ w.T + b
            h = np.where(kept(p), p, 0)
        return h

    def moduli(self, x):
        """Modulus estimates, shape (samples, d), from real inputs of length 2d."""
        Z = embed(np.atleast_2d(x))
        return self.hidden(Z).real @ self.readout.T

    def as_network(self, coordinate=0):
        """A standalone ``CRNetwork`` whose output estimates |z_coordinate|."""
        w_out = self.readout[coordinate][None, :].astype(complex)
        return CRNetwork(list(self.layers) + [w_out],
                         list(self.biases) + [np.zeros(1, dtype=complex)])


def build_modulus_gadget(d, m_sec, gate_bound=1e6):
    """Modulus gadget for d coordinates with m_sec sector units each.

    Estimates are exact on the positive real axis and never exceed |z|; the
    relative error is at most 1 - cos(pi/(2 m_sec)). ``gate_bound`` is the
    largest |z| for which the absolute-value stage stays in its ReLU regime.
    On the measure-zero rays where one sector unit leaves exactly as another
    enters, rounding can drop or double one term of size sin(pi/(2 m_sec))|z|.
    """
    phases = sector_phases(m_sec)
    rot = np.exp(1j * phases)
    m = m_sec
    w1 = np.zeros((d * m, d), dtype=complex)
    for j in range(d):
        w1[j * m:(j + 1) * m, j] = rot
    a = np.exp(-1j * np.pi / 4)
    w2 = np.zeros((2 * d * m, d * m), dtype=complex)
    for u in range(d * m):
        w2[2 * u, u] = a
        w2[2 * u + 1, u] = -a
    b2 = np.full(2 * d * m, 1j * (1.0 + gate_bound))
    readout = np.zeros((d, 2 * d * m))
    for j in range(d):
        readout[j, 2 * j * m:2 * (j + 1) * m] = 1.0 / sector_normalizer(m)
    return ModulusGadget(d, m, gate_bound, (w1, w2),
                         (np.zeros(d * m, dtype=complex), b2), readout)


def sweep_gadget_error(gadget, points=10_000, radius=1.0):
    """Max relative error of the modulus estimate over a dense phase sweep."""
    th = 2 * np.pi * np.arange(points) / points
    z = radius * np.exp(1j * th)
    x = np.zeros((points, 2 * gadget.d))
    x[:, 0] = z.real
    x[:, gadget.d] = z.imag
    est = gadget.moduli(x)[:, 0]
    return float(np.max(np.abs(est - radius)) / radius)


# ------------------------------------------------------------------ radial approximator


def lemma3_budget(d, r, R, L, delta, C_cr=1.0):
    """Width budget 2 C_cr d R^2 L / (sqrt(r) delta)."""
    return 2 * C_cr * d * R ** 2 * L / (np.sqrt(r) * delta)


def lemma4_budget(d, C2, L, delta, C_cr=1.0):
    """Width budget 2 C_cr C2^{3/2} L (2d)^{7/4} / delta for shell targets."""
    return 2 * C_cr * C2 ** 1.5 * L * (2 * d) ** 1.75 / delta


@dataclass(frozen=True)
class RadialCRApproximator:
    """A complex-reaction network approximating x -> g(|x|) on an annulus."""

    d: int
    r: float
    R: float
    delta: float
    m_sec: int
    gadget: ModulusGadget = field(repr=False)
    square: Ridge1DApproximator = field(repr=False)
    outer: Ridge1DApproximator = field(repr=False)
    network: CRNetwork = field(repr=False)
    budget: float = np.inf

    @property
    def width(self):
        """Total number of hidden units."""
        return self.network.hidden_units

    def __call__(self, x):
        return forward_cr(self.network, x)

    def staged(self, x):
        """The same output computed stage by stage from the component pieces."""
        rho = self.gadget.moduli(x)
        s = np.sum(self.square(rho), axis=1)
        return self.outer(s)

    def radius_estimate(self, x):
        rho = self.gadget.moduli(x)
        return np.sqrt(np.maximum(np.sum(self.square(rho), axis=1), 0.0))


def _plan_radial(L, r, R, delta, d):
    """Split the error budget between the radius estimate and the outer stage.

    Half of delta goes to the outer interpolant of G(s) = g(sqrt(s)), whose
    Lipschitz constant on [r^2, R^2] is L/(2r). The other half bounds the
    error of the estimated s = |x|^2, shared equally between the modulus
    gadget (relative underestimate) and the squaring interpolant.
    """
    ds = delta * r / L                      # allowed |s_hat - s|
    sin_max = np.sqrt(0.5 * ds) / R          # (1 - cos^2) R^2 <= ds/2
    m_sec = int(np.ceil(np.pi / (2 * np.arcsin(min(sin_max, 1.0)))))
    m_sec = max(2, m_sec + (m_sec % 2))
    h_sq = np.sqrt(2 * ds / d)               # d h^2 / 4 <= ds/2
    return m_sec, h_sq, 0.5 * delta


def build_radial_cr(g, L, r, R, delta, d, C_cr=1.0, C2=None, gate_bound=None,
                    check_budget=True, verify_points=100_000, seed=0):
    """Complex-reaction network with sup_{r<=|x|<=R} |g(|x|) - f(x)| <= delta.

    The returned width is the total number of hidden units; it is checked
    against the annulus width budget (and the shell-target budget when C2 is
    given). A network exceeding the budget raises BudgetExceeded carrying
    the achieved error.
    """
    if not (0 < r <= R):
        raise ValueError("need 0 < r <= R")
    if not (L > 0 and delta > 0):
        raise ValueError("L and delta must be positive")
    budget = lemma3_budget(d, r, R, L, delta, C_cr)
    if C2 is not None:
        budget = min(budget, lemma4_budget(d, C2, L, delta, C_cr))
    if gate_bound is None:
        gate_bound = 1e6 * R

    m_sec, h_sq, delta_outer = _plan_radial(L, r, R, delta, d)
    gadget = build_modulus_gadget(d, m_sec, gate_bound)
    # t^2 on [0, R]: interpolation overshoots by at most h^2/4; shift by h^2/8
    seg = max(1, int(np.ceil(R / h_sq)))
    h = R / seg
    square = interpolant(lambda t: t * t, np.linspace(0.0, R, seg + 1))
    square = Ridge1DApproximator(square.alphas, square.betas, square.offsets,
                                 square.a + h * h / 8, square.domain, square.budget)

    def G(s):
        return g(np.sqrt(max(s, 0.0)))

    L_outer = L / (2 * r)
    seg = max(1, int(np.ceil((R * R - r * r) * L_outer / (2 * delta_outer))))
    outer = interpolant(G, np.linspace(r * r, R * R, seg + 1), clamp=True)
    if outer.width == 0:
        const = float(g(r))
        net = CRNetwork([np.zeros((1, d), dtype=complex)], [np.array([const + 0j])])
        approx = RadialCRApproximator(d, r, R, delta, m_sec, gadget, square, outer, net, budget)
        return approx

    net = _assemble(gadget, square, outer, d)
    approx = RadialCRApproximator(d, r, R, delta, m_sec, gadget, square, outer, net, budget)
    if check_budget and approx.width > budget:
        err = annulus_sup_error(approx, g, verify_points, seed)
        raise BudgetExceeded(
            f"width {approx.width} exceeds budget {budget:.1f} (achieved error {err:.3g})",
            approx.width, budget, err)
    return approx


def _assemble(gadget, square, outer, d):
    w1, w2 = gadget.layers
    b1, b2 = gadget.biases
    n2 = w2.shape[0]
    k = square.width
    # stage 3: relu(rho_j - t_i) for every coordinate j and knot t_i
    w3 = np.zeros((d * k, n2), dtype=complex)
    b3 = np.zeros(d * k, dtype=complex)
    for j in range(d):
        for i in range(k):
            w3[j * k + i] = gadget.readout[j] * square.betas[i]
            b3[j * k + i] = -square.offsets[i] + 1j
    # stage 4: relu(s - tau_k) with s = sum_j q(rho_j)
    if np.any(square.alphas < 0):
        raise ValueError("squaring stage needs nonnegative slope changes")
    q = np.tile(square.alphas, d)
    n4 = outer.width
    w4 = np.outer(outer.betas, q).astype(complex)
    b4 = -outer.betas * d * square.a - outer.offsets + 1j
    if np.any(outer.betas < 0):
        raise ValueError("outer stage needs positive knot scales")
    w5 = outer.alphas[None, :].astype(complex)
    b5 = np.array([-outer.a + 0j])
    return CRNetwork([w1, w2, w3, w4, w5], [b1, b2, b3, b4.astype(complex), b5])


def sample_annulus(d, r, R, count, seed):
    """Uniform radius in [r, R] times a uniform direction in R^{2d}."""
    rng = np.random.default_rng(seed)
    rho = rng.uniform(r, R, count)
    g = rng.standard_normal((count, 2 * d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rho[:, None]


def annulus_sup_error(approx, g, points=100_000, seed=0, batch=20_000):
    """Max |g(|x|) - f(x)| over sampled annulus points."""
    X = sample_annulus(approx.d, approx.r, approx.R, points, seed)
    err = 0.0
    for s in range(0, points, batch):
        xb = X[s:s + batch]
        rho = np.linalg.norm(xb, axis=1)
        gv = np.array([g(v) for v in rho]) if not _vectorized(g) else g(rho)
        err = max(err, float(np.max(np.abs(gv - approx(xb)))))
    return err


def _vectorized(g):
    try:
        out = g(np.array([1.0, 2.0]))
        return np.shape(out) == (2,)
    except Exception:
        return False


def write_report_csv(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow(row)

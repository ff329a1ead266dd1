"""Radial shell targets, the ball-indicator Fourier density and L2(mu) estimates.

The probability measure mu on R^n (n = 2d) has density phi(x)^2, where phi is
the Fourier transform of the indicator of the unit-volume ball. phi is
radial; its profile is computed from the one-dimensional integral

    phi(rho) = c_{n-1} r^n * int_{-pi/2}^{pi/2} cos(t)^n cos(2 pi rho r sin t) dt

with r the ball radius and c_{n-1} the volume of the unit (n-1)-ball. For
even n the integrand is smooth and pi-periodic, so the midpoint rule with a
node count proportional to the frequency converges spectrally.
"""

import csv
import functools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gammaln

# ------------------------------------------------------------------ targets


@dataclass(frozen=True)
class RadialTarget:
    """Sum of signed shell indicators over the annulus [a, 2a], a = C2*sqrt(2d)."""

    d: int
    N: int
    C2: float
    epsilon: tuple = ()

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be positive")
        if self.N < 0:
            raise ValueError("N must be nonnegative")
        if not self.C2 > 0:
            raise ValueError("C2 must be positive")
        eps = tuple(int(e) for e in self.epsilon)
        if len(eps) != self.N or any(e not in (-1, 1) for e in eps):
            raise ValueError("epsilon must hold N entries of +1 or -1")
        object.__setattr__(self, "epsilon", eps)

    @property
    def inner_radius(self):
        return self.C2 * np.sqrt(2 * self.d)

    @property
    def edges(self):
        """Shell boundaries a_0 < a_1 < ... < a_N."""
        a = self.inner_radius
        return np.array([(1 + i / self.N) * a for i in range(self.N + 1)]) if self.N else np.array([a])

    @classmethod
    def alternating(cls, d, N, C2=1.0):
        return cls(d, N, C2, tuple((-1) ** i for i in range(N)))

    @classmethod
    def random(cls, d, N, C2=1.0, seed=0):
        rng = np.random.default_rng(seed)
        return cls(d, N, C2, tuple(int(e) for e in rng.choice([-1, 1], size=N)))

    def to_json(self):
        return json.dumps({"d": self.d, "N": self.N, "C2": self.C2, "epsilon": list(self.epsilon)})

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls(int(doc["d"]), int(doc["N"]), float(doc["C2"]), tuple(doc["epsilon"]))


def _radii(x, dim):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != dim:
        raise ValueError(f"expected inputs of length {dim}, got {x.shape[-1]}")
    return np.linalg.norm(x, axis=-1)


def shell_index(t, rho):
    """1-based shell index of each radius, 0 outside the annulus.

    Shells are closed; a shared endpoint belongs to the lower-index shell.
    """
    rho = np.asarray(rho, dtype=np.float64)
    if t.N == 0:
        return np.zeros(rho.shape, dtype=int)
    e = t.edges
    idx = np.searchsorted(e, rho, side="left")
    idx = np.maximum(idx, 1)
    inside = (rho >= e[0]) & (rho <= e[-1])
    return np.where(inside, idx, 0)


def eval_target(t, x):
    """Target value eps_i when the norm of x lies in shell i, else 0."""
    rho = _radii(x, 2 * t.d)
    idx = shell_index(t, rho)
    eps = np.array((0,) + t.epsilon, dtype=np.float64)
    out = eps[idx]
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LipschitzSurrogate:
    """Continuous version of a target: a tent of slope N on each shell, capped at 1."""

    target: RadialTarget

    @property
    def slope(self):
        return self.target.N


def lipschitz_surrogate(t):
    return LipschitzSurrogate(t)


def eval_surrogate(s, x):
    """sum_i eps_i * min(1, N * dist(|x|, edges of shell i)) inside shell i."""
    t = s.target
    rho = _radii(x, 2 * t.d)
    idx = shell_index(t, rho)
    if t.N == 0:
        out = np.zeros(rho.shape)
    else:
        e = t.edges
        k = np.maximum(idx, 1)
        dist = np.minimum(np.abs(rho - e[k - 1]), np.abs(rho - e[np.minimum(k, t.N)]))
        eps = np.array((0,) + t.epsilon, dtype=np.float64)
        out = np.where(idx > 0, eps[idx] * np.minimum(1.0, t.N * dist), 0.0)
    return float(out) if np.ndim(out) == 0 else out


def surrogate_profile(s):
    """The surrogate as a function of the radius alone."""
    t = s.target

    def g(rho):
        rho = np.asarray(rho, dtype=np.float64)
        x = np.zeros(rho.shape + (2 * t.d,))
        x[..., 0] = rho
        return eval_surrogate(s, x)

    return g


# ------------------------------------------------------------------ density


def unit_ball_volume(n):
    return float(np.exp(0.5 * n * np.log(np.pi) - gammaln(0.5 * n + 1)))


def sphere_area(n):
    """Surface area of the unit sphere in R^n."""
    return n * unit_ball_volume(n)


def ball_radius(n):
    """Radius of the n-ball with unit volume."""
    return unit_ball_volume(n) ** (-1.0 / n)


def phi_profile(rho, n, extra_nodes=32, chunk=512):
    """phi as a function of the radius, by the periodic midpoint rule.

    Accurate to about 1e-14 absolute for even n. Cost grows linearly with
    the radius because the node count follows the oscillation frequency.
    """
    if n < 2 or n % 2:
        raise ValueError("the density is defined for even ambient dimension n >= 2")
    rho = np.atleast_1d(np.asarray(rho, dtype=np.float64))
    flat = np.abs(rho.ravel())
    r = ball_radius(n)
    scale = unit_ball_volume(n - 1) * r ** n
    out = np.empty_like(flat)
    order = np.argsort(flat, kind="stable")
    for s in range(0, flat.size, chunk):
        sel = order[s:s + chunk]
        rr = flat[sel]
        m = int(np.ceil(2 * np.pi * r * rr.max())) + extra_nodes
        th = -0.5 * np.pi + np.pi * (np.arange(m) + 0.5) / m
        w = np.cos(th) ** n
        out[sel] = scale * (np.pi / m) * (np.cos(2 * np.pi * np.outer(rr, r * np.sin(th))) @ w)
    return out.reshape(rho.shape)


@dataclass(frozen=True)
class DensityModel:
    """Cached radial profile of phi plus the radial law of mu.

    ``grid`` holds radii 0..r_trunc, ``phi`` the profile there and ``cdf``
    the radial distribution function of mu restricted to the truncation
    ball, normalized to end at 1. ``mass`` is the integral of phi^2 over the
    truncation ball before normalization.
    """

    n: int
    radius: float
    r_trunc: float
    tail_constant: float
    grid: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    cdf: np.ndarray = field(repr=False)
    mass: float = 1.0
    spline: object = field(repr=False, default=None)

    @property
    def tail_mass(self):
        """Estimated mu-mass outside the truncation ball."""
        return self.tail_constant / self.r_trunc


def _radial_density(grid, phi, n):
    return sphere_area(n) * grid ** (n - 1) * phi ** 2


def _cumulative(grid, p):
    # integral of the cubic spline through p: fourth order in the grid step;
    # the running maximum guards against spline undershoot at zeros of phi
    return np.maximum.accumulate(CubicSpline(grid, p).antiderivative()(grid))


@functools.lru_cache(maxsize=16)
def build_density(n, tail_tol=1e-3, step=0.02, probe_radius=64.0):
    """Build the density model for ambient dimension ``n``.

    The radial density decays like K / rho^2 on average, so the tail mass
    beyond R is about K / R. K is estimated from the computed profile over
    [probe_radius / 2, probe_radius] and the truncation radius is K / tail_tol.
    """
    if n > 16:
        raise ValueError("dimensions above 16 are not supported")
    probe = np.arange(0.5 * probe_radius, probe_radius, step)
    p = _radial_density(probe, phi_profile(probe, n), n)
    K = float(np.mean(p * probe ** 2))
    if not np.isfinite(K) or K <= 0:
        raise RuntimeError(f"tail envelope did not converge for n={n}: estimate {K!r}")
    r_trunc = K / tail_tol
    grid = np.arange(0.0, r_trunc + step, step)
    phi = phi_profile(grid, n)
    c = _cumulative(grid, _radial_density(grid, phi, n))
    mass = float(c[-1])
    if not 0.9 < mass < 1.0 + 1e-6:
        raise RuntimeError(f"radial mass {mass} inside r={r_trunc:.1f} is implausible for n={n}")
    spline = CubicSpline(grid, phi)
    return DensityModel(n, ball_radius(n), float(grid[-1]), K, grid, phi, c / mass, mass, spline)


def eval_phi(m, x):
    """phi at points x (rows of length n), using the cached profile."""
    rho = _radii(x, m.n)
    return eval_phi_radius(m, rho)


def eval_phi_radius(m, rho):
    scalar = np.ndim(rho) == 0
    rho = np.atleast_1d(np.asarray(rho, dtype=np.float64))
    inside = rho <= m.grid[-1]
    out = np.where(inside, m.spline(np.minimum(rho, m.grid[-1])), 0.0)
    if np.any(~inside):
        out = np.asarray(out, dtype=np.float64).copy()
        out[~inside] = phi_profile(rho[~inside], m.n)
    return float(out[0]) if scalar else out


def radial_cdf(m, rho):
    """Distribution function of |x| under mu truncated at r_trunc."""
    return np.interp(rho, m.grid, m.cdf)


def sample_radii(m, count, rng):
    u = rng.random(count)
    return np.interp(u, m.cdf, m.grid)


def sample_mu(m, count, seed):
    """Draw ``count`` points from mu restricted to the truncation ball."""
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(seed)
    rho = sample_radii(m, count, rng)
    g = rng.standard_normal((count, m.n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rho[:, None]


def l2_mu_distance(fa, fb, m, count, seed):
    """Monte-Carlo estimate of the squared L2(mu) distance and its stderr."""
    X = sample_mu(m, count, seed)
    sq = (np.asarray(fa(X), dtype=np.float64) - np.asarray(fb(X), dtype=np.float64)) ** 2
    return float(np.mean(sq)), float(np.std(sq, ddof=1) / np.sqrt(count)) if count > 1 else 0.0


def normalization_estimate(m, count, seed, scale=1.0):
    """Importance-sampling estimate of the integral of phi^2 over the truncation ball.

    Points are drawn with a uniform direction and a radius density
    proportional to (1 + rho/scale)^-2 on [0, r_trunc], which shares the
    rho^-2 decay of the target so the weights stay bounded. Returns
    (estimate, stderr).
    """
    rng = np.random.default_rng(seed)
    R = m.r_trunc
    # inverse CDF of the proposal on [0, R]
    norm = scale * R / (scale + R)
    u = rng.random(count)
    t = u * norm
    rho = scale * t / (scale - t)
    q_rad = (1.0 + rho / scale) ** -2 / norm
    g = rng.standard_normal((count, m.n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    X = g * rho[:, None]
    phi = eval_phi(m, X)
    area = sphere_area(m.n) * rho ** (m.n - 1)
    w = phi ** 2 * area / q_rad
    return float(np.mean(w)), float(np.std(w, ddof=1) / np.sqrt(count))


def ks_distance(samples, cdf):
    """Kolmogorov-Smirnov distance between a sample and a continuous CDF."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    F = cdf(x)
    hi = np.arange(1, n + 1) / n - F
    lo = F - np.arange(0, n) / n
    return float(max(hi.max(), lo.max()))


# ------------------------------------------------------------------ files


def write_samples_csv(path, X):
    X = np.asarray(X)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{k}" for k in range(X.shape[1])])
        for row in X:
            w.writerow([repr(float(v)) for v in row])

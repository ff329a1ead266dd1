"""Complex arithmetic helpers and the zReLU activation.

Complex scalars, vectors and matrices are plain numpy ``complex128`` values
and arrays. Everything here is vectorised: scalars and arrays of any shape
are accepted wherever an elementwise operation makes sense.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def as_complex(z):
    """Return ``z`` as a complex128 scalar or array."""
    return np.asarray(z, dtype=np.complex128)


def phase(z):
    """Phase of ``z`` in [0, 2*pi).

    ``atan2`` results below zero are shifted by 2*pi. The phase of 0 is 0.
    """
    z = as_complex(z)
    theta = np.arctan2(z.imag, z.real)
    theta = np.where(theta < 0, theta + TWO_PI, theta)
    # -0.0 + 2*pi rounding can land exactly on 2*pi
    theta = np.where(theta >= TWO_PI, 0.0, theta)
    if theta.ndim == 0:
        return float(theta)
    return theta


def kept(z):
    """Boolean gate of zReLU.

    True when the phase lies in [0, pi/2] or [pi, 3*pi/2], boundaries
    included. Equivalently the real and imaginary parts do not have strictly
    opposite signs, which is how it is computed: the test is exact and
    invariant under positive scaling.
    """
    z = as_complex(z)
    # product of signs is exact in {-1, 0, 1}; NaN parts stay kept
    gate = ~(np.sign(z.real) * np.sign(z.imag) < 0)
    if gate.ndim == 0:
        return bool(gate)
    return gate


def zrelu(z):
    """zReLU: ``z`` on the kept phase sectors, 0 elsewhere."""
    z = as_complex(z)
    out = np.where(kept(z), z, 0.0 + 0.0j)
    if out.ndim == 0:
        return complex(out)
    return out


def zrelu_wirtinger(z):
    """Wirtinger derivatives (d/dz, d/dzbar) of zReLU.

    On the kept region zReLU is the identity, so the pair is (1, 0); on the
    dropped region it is (0, 0). Boundaries count as kept, so
    ``zrelu(z) == dz * z`` holds exactly everywhere.
    """
    g = kept(z)
    dz = np.where(g, 1.0 + 0.0j, 0.0 + 0.0j)
    dzbar = np.zeros_like(dz)
    if dz.ndim == 0:
        return complex(dz), complex(dzbar)
    return dz, dzbar


def relu(x):
    return np.maximum(x, 0.0)


def matvec(W, x):
    """Matrix-vector product with a shape check."""
    W = np.asarray(W)
    x = np.asarray(x)
    if W.ndim != 2 or x.ndim != 1 or W.shape[1] != x.shape[0]:
        raise ValueError(f"shape mismatch: matrix {W.shape} with vector {x.shape}")
    return W @ x


def norm2(v):
    """Entry-wise 2-norm of a complex vector or matrix."""
    v = np.asarray(v)
    return float(np.sqrt(np.sum(v.real ** 2 + v.imag ** 2)))


def real_inner(a, b):
    """Real inner product Re(sum(conj(a) * b)) of two complex arrays.

    This is the Euclidean inner product of the stacked (real, imag) parts.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.sum(a.real * b.real + a.imag * b.imag))


def realify(v):
    """Stack real and imaginary parts of a 1-D complex array."""
    v = np.asarray(v)
    return np.concatenate([v.real, v.imag])

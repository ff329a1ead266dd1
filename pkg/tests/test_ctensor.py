import numpy as np
import pytest
from hypothesis import given, strategies as st

from crnet.ctensor import (as_complex, kept, matvec, norm2, phase, real_inner, realify, relu,
                           zrelu, zrelu_wirtinger)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)


@pytest.mark.parametrize("z, expected", [
    (1 + 1j, 1 + 1j),          # first quadrant
    (-2 - 3j, -2 - 3j),        # third quadrant
    (3 - 2j, 0j),              # fourth quadrant
    (-1 + 4j, 0j),             # second quadrant
    (2.0, 2.0),                # sector boundaries are kept
    (1j, 1j),
    (-5.0, -5.0),
    (-2j, -2j),
    (0j, 0j),
])
def test_zrelu_values(z, expected):
    assert zrelu(z) == expected


def test_scalar_in_scalar_out():
    assert isinstance(zrelu(1 + 1j), complex)
    assert isinstance(phase(1j), float)


@pytest.mark.parametrize("z, theta", [(1.0, 0.0), (1j, np.pi / 2), (-1.0, np.pi), (-1j, 1.5 * np.pi)])
def test_phase_range(z, theta):
    assert phase(z) == pytest.approx(theta)


def test_phase_of_many_points_is_in_range(rng):
    z = rng.standard_normal(1000) + 1j * rng.standard_normal(1000)
    p = phase(z)
    assert np.all((p >= 0) & (p < 2 * np.pi))


@given(complexes, st.floats(1e-6, 1e6))
def test_positive_homogeneity(z, alpha):
    assert zrelu(alpha * z) == pytest.approx(alpha * zrelu(z), rel=1e-12, abs=1e-300)


@given(complexes)
def test_gate_identity(z):
    gate, conj_part = zrelu_wirtinger(z)
    assert conj_part == 0
    assert zrelu(z) == gate * z


@given(complexes)
def test_zrelu_is_odd(z):
    # point reflection maps each kept quadrant onto the other kept quadrant
    assert zrelu(-z) == -zrelu(z)


@given(complexes)
def test_zrelu_is_idempotent(z):
    assert zrelu(zrelu(z)) == zrelu(z)


@given(finite.filter(lambda v: v != 0), finite.filter(lambda v: v != 0))
def test_rotation_by_quarter_turn_swaps_gates(a, b):
    z = complex(a, b)
    assert kept(z) != kept(1j * z)


def test_zrelu_discontinuous_across_boundary():
    eps = 1e-9
    assert abs(zrelu(1 + eps * 1j) - zrelu(1 - eps * 1j)) == pytest.approx(1.0, rel=1e-8)


def test_relu():
    np.testing.assert_array_equal(relu(np.array([-1.0, 0.0, 2.5])), [0.0, 0.0, 2.5])


def test_matvec_shape_check():
    with pytest.raises(ValueError):
        matvec(np.ones((2, 3)), np.ones(2))


def test_matvec_matches_numpy(rng):
    W = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    np.testing.assert_allclose(matvec(W, x), W @ x)


def test_realify_preserves_inner_products(rng):
    a = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    b = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    assert real_inner(a, b) == pytest.approx(float(realify(a) @ realify(b)))
    assert norm2(a) == pytest.approx(float(np.linalg.norm(realify(a))))


def test_as_complex():
    assert as_complex(np.array([1.0])).dtype == np.complex128

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from crnet import dynamics as dyn
from crnet import networks as nw
from crnet import symmetry as sym

rhos = st.builds(complex, st.floats(-3, 3), st.floats(-3, 3))


def test_phi_move_rows():
    theta = np.array([[1.0 + 1j], [2.0 - 1j], [5.0 + 0j]])
    out = sym.phi_move(theta, 0.5j, 0, 1)
    np.testing.assert_allclose(out[:, 0], [1 + 1j + 0.5j * (2 - 1j), (1 - 0.5j) * (2 - 1j), 5.0])


def test_phi_move_errors():
    with pytest.raises(ValueError):
        sym.phi_move(np.eye(2), 0.3, 1, 1)
    with pytest.raises(IndexError):
        sym.phi_move(np.eye(2), 0.3, 0, 2)
    with pytest.raises(ValueError):
        sym.compensator(np.eye(2), 1.0, 0, 1)


@pytest.mark.parametrize("rho, matrix", [
    # the printed real-rho and complex-rho matrices written out by hand
    (0.3, [[1, 0, 0.3, 0], [0, 1, 0, 0.3], [0, 0, 0.7, 0], [0, 0, 0, 0.7]]),
    (-0.7, [[1, 0, -0.7, 0], [0, 1, 0, -0.7], [0, 0, 1.7, 0], [0, 0, 0, 1.7]]),
    (0.25 + 0.5j, [[1, 0, 0.25, -0.5], [0, 1, 0.5, 0.25], [0, 0, 0.75, 0.5], [0, 0, -0.5, 0.75]]),
    (-0.5 - 2j, [[1, 0, -0.5, 2], [0, 1, -2, -0.5], [0, 0, 1.5, -2], [0, 0, 2, 1.5]]),
])
def test_affine_form_matches_printed_matrices(rho, matrix):
    np.testing.assert_array_equal(sym.affine_form(rho), np.array(matrix, dtype=float))
    np.testing.assert_array_equal(sym.printed_affine(rho), np.array(matrix, dtype=float))


@given(rhos)
def test_affine_form_exact_for_random_rho(rho):
    np.testing.assert_array_equal(sym.affine_form(rho), sym.printed_affine(rho))


@given(st.integers(0, 2 ** 31))
def test_permutation_and_scaling_are_exact(seed):
    rng = np.random.default_rng(seed)
    net = nw.init_cr([2, 4, 3, 1], seed, bias=True)
    net = net.replace(biases=[rng.standard_normal(b.shape) + 1j * rng.standard_normal(b.shape)
                              for b in net.biases])
    X = rng.standard_normal((200, 4))
    for moved in (sym.exact_equioutput_permutation(net, 0, rng.permutation(4)),
                  sym.exact_equioutput_permutation(net, 1, rng.permutation(3)),
                  sym.exact_equioutput_scaling(net, 1, 2, float(rng.uniform(0.01, 100)))):
        assert sym.output_change(net, moved, X) <= 1e-12 * max(1, np.max(np.abs(nw.forward(net, X))))


def test_scaling_rejects_nonpositive_factor():
    net = nw.init_cr([2, 2, 1], 0)
    with pytest.raises(ValueError):
        sym.exact_equioutput_scaling(net, 0, 0, 0.0)


def test_permutation_preserves_loss(rng):
    net = nw.init_r([4, 5, 1], 1)
    data = dyn.Dataset.random(4, 50, 2)
    moved = sym.exact_equioutput_permutation(net, 0, rng.permutation(5))
    assert sym.loss_change(net, moved, data) <= 1e-14


def test_sign_flip_exact_for_complex_only(rng):
    X = rng.standard_normal((200, 4))
    cr = nw.init_cr([2, 3, 1], 3)
    assert sym.output_change(cr, sym.sign_flip(cr, 0, 1), X) <= 1e-13
    r = nw.init_r([4, 3, 1], 3)
    assert sym.output_change(r, sym.sign_flip(r, 0, 1), X) > 1e-3


@pytest.mark.parametrize("rho", [0.3, -0.4 + 0.3j, 0.5 - 0.6j, 0.25j])
def test_phi_move_preserves_output_on_stable_inputs(rho, rng):
    net = nw.init_cr([2, 4, 3, 1], 11)
    X = rng.standard_normal((2000, 4))
    moved = sym.apply_phi_move(net, 0, rho, 0, 2)
    stable = sym.gate_stable(net, 0, 0, 2, rho, X)
    assert 0 < stable.mean() < 1
    diff = np.abs(nw.forward(moved, X) - nw.forward(net, X))
    assert np.max(diff[stable]) <= 1e-10
    assert np.max(diff[~stable]) > 1e-6


def test_phi_move_rejects_complex_rho_on_real_net():
    with pytest.raises(ValueError):
        sym.apply_phi_move(nw.init_r([4, 3, 1], 0), 0, 0.2 + 0.1j, 0, 1)
    with pytest.raises(IndexError):
        sym.apply_phi_move(nw.init_r([4, 3, 1], 0), 1, 0.2, 0, 1)


def test_split_unit_keeps_function(rng):
    net = nw.init_cr([2, 3, 1], 2)
    bigger, (i, j) = sym.split_unit(net, 1, 0.3)
    X = rng.standard_normal((100, 4))
    assert bigger.widths[1] == 4 and (i, j) == (1, 3)
    np.testing.assert_allclose(nw.forward(bigger, X), nw.forward(net, X), atol=1e-13)


@pytest.mark.parametrize("rho", [0.3, -0.7, 0.9])
def test_real_rho_on_duplicate_pair_is_exact_everywhere(rho, rng):
    net, _ = sym.split_unit(nw.init_r([4, 3, 1], 4), 0)
    X = rng.standard_normal((500, 4))
    assert sym.gate_stable(net, 0, 0, 3, rho, X).all()
    assert sym.output_change(net, sym.apply_phi_move(net, 0, rho, 0, 3), X) <= 1e-12


@pytest.mark.parametrize("family", ["complex", "real"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_interpolating_critical_point(family, seed):
    net, data, (i, j) = sym.interpolating_critical_point(family, seed=seed)
    _, g = dyn.exp_loss_and_grad(net, data)
    assert g.norm() < 1e-10
    np.testing.assert_array_equal(net.weights[0][i], net.weights[0][j])
    rep = sym.critical_point_probe(net, sym.EquioutputMap("phi-move", 0, i, j, 0.3), data)
    assert rep.after_norm < 1e-10 and rep.verdict == "remains-critical"
    assert rep.stable_fraction == 1.0


@pytest.mark.parametrize("rho", [0.3 + 0.5j, -0.4 + 0.3j, 0.25j])
def test_complex_rho_leaves_critical_point(rho):
    net, data, (i, j) = sym.interpolating_critical_point("complex", seed=4)
    rep = sym.critical_point_probe(net, sym.EquioutputMap("phi-move", 0, i, j, rho), data)
    assert rep.before_norm < 1e-10
    assert rep.after_norm > 100 * 1e-6
    assert rep.verdict == "leaves-critical"


def test_probe_marks_small_imaginary_parts_undetermined():
    net, data, (i, j) = sym.interpolating_critical_point("complex", seed=0)
    rep = sym.critical_point_probe(net, sym.EquioutputMap("phi-move", 0, i, j, 0.3 + 0.1j), data)
    assert rep.verdict == "undetermined"


def test_equioutput_map_kinds(rng):
    net = nw.init_cr([2, 3, 1], 0)
    X = rng.standard_normal((50, 4))
    for m in (sym.EquioutputMap("permutation", 0, perm=(2, 0, 1)),
              sym.EquioutputMap("positive-scaling", 0, i=1, scale=3.0)):
        assert sym.output_change(net, m.apply(net), X) <= 1e-13
    with pytest.raises(ValueError):
        sym.EquioutputMap("shear", 0).apply(net)


@pytest.mark.parametrize("family, flips", [("complex", lambda n: 2 ** n), ("real", lambda n: 1)])
def test_group_census(family, flips):
    cen = sym.group_census([1, 2, 3], family=family)
    assert cen.permutations == tuple(math.factorial(n) for n in (1, 2, 3))
    assert cen.sign_flips == tuple(flips(n) for n in (1, 2, 3))
    assert cen.within_bound
    assert cen.bounds == (2, 8, 48)


def test_group_census_cap():
    with pytest.raises(ValueError):
        sym.group_census([5])

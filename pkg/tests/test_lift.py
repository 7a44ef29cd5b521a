import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loopdarboux.baseform import compatible_J, probe_radius, quadratic2d, scaled2d, split4d, standard_form, standard_J
from loopdarboux.errors import DomainError, PartitionError
from loopdarboux.lift import (DEFAULT_FUNCTIONS, FUNCTION_CATALOG, LiftedFunction, LiftedIsotopy,
                              annulus_partition, builtin_function, builtin_partition, hamiltonian_field,
                              lift_derivative, lift_function, lift_function_derivative, lift_J, lift_map,
                              lifted_partition, omega_gram, omega_loop, sigma_gradient_lift)
from loopdarboux.loopcore import LoopGrid, TangentField, random_loop, random_tangent, sample_curve
from loopdarboux.moser import IsotopyFlow, scaled2d_family, scaling_family

from oracles import annulus_inner, hamiltonian_2d, period_integral

seeds = st.integers(0, 2**32 - 1)
CIRCLE = sample_curve({"kind": "circle"}, 256)
E1 = TangentField.constant([1.0, 0.0], 256)
E2 = TangentField.constant([0.0, 1.0], 256)


def _probe(seed, n=2, N=64, M=4, radius=1.0):
    return (random_loop(seed, n, N, M, radius), random_tangent(seed + 1, n, N, M),
            random_tangent(seed + 2, n, N, M), random_tangent(seed + 3, n, N, M))


# ---------------------------------------------------------------- omega_loop

def test_omega_standard_circle():
    assert omega_loop(standard_form(2), CIRCLE, E1, E2) == 1.0


def test_omega_quadratic_example():
    exact = period_integral(lambda t: 1 + math.cos(2 * math.pi * t) ** 2)
    assert abs(exact - 1.5) <= 1e-13
    assert abs(omega_loop(quadratic2d(), CIRCLE, E1, E2) - 1.5) <= 1e-12


def test_omega_off_centre_circle_against_quad():
    # (1 + x1^2) on a shifted circle: integrand 1 + (c + cos 2 pi t)^2
    gamma = sample_curve({"kind": "circle", "center": [0.4, 0.3], "radius": 0.9}, 128)
    ref = period_integral(lambda t: 1 + (0.4 + 0.9 * math.cos(2 * math.pi * t)) ** 2)
    X, Y = TangentField.constant([1.0, 0.0], 128), TangentField.constant([0.0, 1.0], 128)
    assert abs(omega_loop(quadratic2d(), gamma, X, Y) - ref) <= 1e-12


def test_omega_outside_domain():
    gamma = sample_curve({"kind": "circle", "radius": 2.5}, 16)
    X = TangentField.constant([1.0, 0.0], 16)
    with pytest.raises(DomainError):
        omega_loop(scaled2d(), gamma, X, X)


@pytest.mark.parametrize("form", [scaled2d(), quadratic2d(), split4d()], ids=lambda f: f.name)
@given(seed=seeds, a=st.floats(-2, 2), b=st.floats(-2, 2))
@settings(max_examples=15)
def test_omega_bilinear_antisymmetric(form, seed, a, b):
    gamma, X, Y, Z = _probe(seed, form.n, radius=probe_radius(form.domain_radius))
    assert abs(omega_loop(form, gamma, X, X)) <= 1e-15
    assert abs(omega_loop(form, gamma, X, Y) + omega_loop(form, gamma, Y, X)) <= 1e-14
    lhs = omega_loop(form, gamma, X * a + Z * b, Y)
    rhs = a * omega_loop(form, gamma, X, Y) + b * omega_loop(form, gamma, Z, Y)
    assert abs(lhs - rhs) <= 1e-13


def test_gram_matches_pairings():
    gamma, X, Y, Z = _probe(4)
    G = omega_gram(scaled2d(), gamma, np.stack([X.values, Y.values, Z.values]))
    assert abs(G[0, 1] - omega_loop(scaled2d(), gamma, X, Y)) <= 1e-15
    np.testing.assert_allclose(G, -G.T, atol=1e-15)


# ---------------------------------------------------------------- lifted isotopy

def test_lift_map_identity_and_origin():
    flow = IsotopyFlow(scaled2d_family(), 32)
    gamma = random_loop(3, 2, 32, 4, 1.5)
    assert np.array_equal(lift_map(flow, 0.0, gamma).values, gamma.values)
    assert np.array_equal(LiftedIsotopy(flow).apply(0.0, gamma).values, gamma.values)
    zero = sample_curve({"kind": "constant", "point": [0.0, 0.0]}, 16)
    assert np.array_equal(lift_map(flow, 1.0, zero).values, zero.values)


def test_lift_map_scaling_circle():
    flow = IsotopyFlow(scaling_family(), 1024)
    gamma = sample_curve({"kind": "circle"}, 64)
    out = lift_map(flow, 1.0, gamma)
    np.testing.assert_allclose(out.values, gamma.values / math.sqrt(2), atol=1e-8)
    X = random_tangent(1, 2, 64, 4)
    np.testing.assert_allclose(lift_derivative(flow, 1.0, gamma, X).values, X.values / math.sqrt(2), atol=1e-8)
    assert np.array_equal(lift_derivative(flow, 0.0, gamma, X).values, X.values)


def test_lift_derivative_linear():
    flow = IsotopyFlow(scaled2d_family(), 32)
    gamma, X, Y, _ = _probe(8, N=32)
    a, b = 0.7, -1.3
    lhs = lift_derivative(flow, 1.0, gamma, X * a + Y * b).values
    rhs = (lift_derivative(flow, 1.0, gamma, X) * a + lift_derivative(flow, 1.0, gamma, Y) * b).values
    assert np.abs(lhs - rhs).max() <= 1e-14


def test_lift_pointwise_and_refinement():
    flow = IsotopyFlow(scaled2d_family(), 32)
    fine = random_loop(2, 2, 64, 4, 1.5)
    coarse = fine.restrict(2)
    X = random_tangent(9, 2, 64, 4)
    iso = LiftedIsotopy(flow)
    assert np.array_equal(iso.apply(1.0, fine).restrict(2).values, iso.apply(1.0, coarse).values)
    assert np.array_equal(iso.derivative(1.0, fine, X).restrict(2).values,
                          iso.derivative(1.0, coarse, X.restrict(2)).values)
    # row k depends only on row k: permuting the samples permutes the output
    perm = np.random.default_rng(0).permutation(64)
    shuffled = iso.apply(1.0, LoopGrid(fine.values[perm])).values
    np.testing.assert_allclose(shuffled, iso.apply(1.0, fine).values[perm], atol=1e-15)


def test_lift_derivative_chain_fd():
    flow = IsotopyFlow(scaled2d_family(), 128)
    h = 1e-4
    for seed in range(5):
        gamma, X, _, _ = _probe(seed * 10, N=32, radius=1.5)
        fd = (lift_map(flow, 1.0, gamma.translate(X, h)).values
              - lift_map(flow, 1.0, gamma.translate(X, -h)).values) / (2 * h)
        assert np.abs(lift_derivative(flow, 1.0, gamma, X).values - fd).max() <= 1e-6


# ---------------------------------------------------------------- lifted functions

def test_lift_function_examples():
    assert abs(lift_function(builtin_function("coord1"), CIRCLE)) <= 1e-12
    assert abs(lift_function(builtin_function("square1"), CIRCLE) - 0.5) <= 1e-12
    assert lift_function(builtin_function("constant", c=2.5), CIRCLE) == 2.5


@pytest.mark.parametrize("name", DEFAULT_FUNCTIONS)
def test_lift_function_on_constant_loop(name):
    lf = builtin_function(name)
    p = np.array([0.3, -0.8])
    gamma = sample_curve({"kind": "constant", "point": p}, 16)
    assert abs(lf(gamma) - float(lf.f(p))) <= 1e-15


@pytest.mark.parametrize("name", DEFAULT_FUNCTIONS)
@given(seed=seeds)
@settings(max_examples=15)
def test_lift_function_derivative_fd(name, seed):
    lf = builtin_function(name)
    gamma, X, _, _ = _probe(seed)
    h = 1e-5
    fd = (lift_function(lf, gamma.translate(X, h)) - lift_function(lf, gamma.translate(X, -h))) / (2 * h)
    assert abs(lift_function_derivative(lf, gamma, X) - fd) <= 1e-8


def test_lift_function_derivative_linear_and_zero():
    a = np.array([0.5, -2.0])
    lf = builtin_function("linear", a=a)
    gamma, X, _, _ = _probe(1)
    assert lift_function_derivative(lf, gamma, X) == pytest.approx(np.mean(X.values @ a), abs=1e-15)
    assert lift_function_derivative(lf, gamma, TangentField.zeros(2, 64)) == 0.0


# ---------------------------------------------------------------- Hamiltonian fields

def test_hamiltonian_coordinate_example():
    np.testing.assert_array_equal(hamiltonian_field(standard_form(2), builtin_function("coord1"), [0.2, 0.4]),
                                  [0.0, -1.0])
    assert np.array_equal(hamiltonian_field(standard_form(2), builtin_function("constant", c=3.0), [0.2, 0.4]),
                          [0.0, 0.0])


@pytest.mark.parametrize("name", DEFAULT_FUNCTIONS)
def test_hamiltonian_matches_hand_solve_2d(name):
    form, lf = scaled2d(), builtin_function(name)
    for x in random_loop(3, 2, 16, 3, 1.5).values:
        w = form.matrix(x)[0, 1]
        np.testing.assert_allclose(hamiltonian_field(form, lf, x), hamiltonian_2d(w, lf.grad(x)), atol=1e-14)


@pytest.mark.parametrize("form", [standard_form(4), split4d(), scaled2d(), quadratic2d()], ids=lambda f: f.name)
def test_hamiltonian_residual(form):
    x = random_loop(5, form.n, 64, 4, probe_radius(form.domain_radius)).values
    for name in DEFAULT_FUNCTIONS:
        lf = builtin_function(name)
        X = hamiltonian_field(form, lf, x)
        res = np.einsum("kji,kj->ki", form.matrix(x), X) - lf.grad(x)
        assert np.abs(res).max() <= 1e-12


def test_sigma_gradient_examples():
    gamma = random_loop(0, 2, 32, 4, 2.0)
    Xf = sigma_gradient_lift(standard_form(2), builtin_function("coord1"), gamma)
    assert np.array_equal(Xf.values, np.tile([0.0, -1.0], (32, 1)))
    Z = sigma_gradient_lift(standard_form(2), builtin_function("constant", c=1.0), gamma)
    assert not np.any(Z.values)


@pytest.mark.parametrize("form", [standard_form(2), scaled2d(), quadratic2d(), split4d()], ids=lambda f: f.name)
@pytest.mark.parametrize("name", DEFAULT_FUNCTIONS)
def test_sigma_gradient_identity(form, name):
    lf = builtin_function(name)
    for seed in range(10):
        gamma, Y, _, _ = _probe(100 * seed, form.n, radius=probe_radius(form.domain_radius))
        Xf = sigma_gradient_lift(form, lf, gamma)
        assert abs(lift_function_derivative(lf, gamma, Y) - omega_loop(form, gamma, Xf, Y)) <= 1e-10


# ---------------------------------------------------------------- lifted J

def test_lift_J_examples():
    J = standard_J(2)
    assert np.array_equal(lift_J(J, CIRCLE, E1).values, E2.values)
    X = random_tangent(2, 2, 256, 8)
    np.testing.assert_allclose(lift_J(J, CIRCLE, lift_J(J, CIRCLE, X)).values, -X.values, atol=1e-12)
    assert omega_loop(standard_form(2), CIRCLE, E1, lift_J(J, CIRCLE, E1)) == 1.0


@pytest.mark.parametrize("form", [scaled2d(), quadratic2d(), split4d()], ids=lambda f: f.name)
@given(seed=seeds)
@settings(max_examples=10)
def test_lift_J_compatible(form, seed):
    J = compatible_J(form)
    gamma, X, Y, _ = _probe(seed, form.n, radius=probe_radius(form.domain_radius))
    JX, JY = lift_J(J, gamma, X), lift_J(J, gamma, Y)
    assert abs(omega_loop(form, gamma, JX, JY) - omega_loop(form, gamma, X, Y)) <= 1e-10
    np.testing.assert_allclose(lift_J(J, gamma, JX).values, -X.values, atol=1e-12)
    assert omega_loop(form, gamma, X, JX) > 0


# ---------------------------------------------------------------- partitions

def test_single_bump_partition():
    one = builtin_function("constant", c=1.0)
    assert lifted_partition([one], CIRCLE) == [1.0]


def test_partition_certification_failure():
    half = builtin_function("constant", c=0.5)
    with pytest.raises(PartitionError):
        lifted_partition([half], CIRCLE)


def test_annulus_on_circles_against_quad():
    bumps = annulus_partition()
    for center, radius in (((0.0, 0.0), 1.0), ((0.4, -0.2), 0.9), ((0.7, 0.0), 1.1)):
        gamma = sample_curve({"kind": "circle", "center": list(center), "radius": radius}, 256)
        w = lifted_partition(bumps, gamma)
        assert abs(sum(w) - 1.0) <= 1e-12

        def r(t):
            return math.hypot(center[0] + radius * math.cos(2 * math.pi * t),
                              center[1] + radius * math.sin(2 * math.pi * t))

        ref = period_integral(lambda t: annulus_inner(r(t)))
        assert abs(w[0] - ref) <= 1e-10


def test_partition_zero_outside_support():
    inner, outer = annulus_partition()
    far = sample_curve({"kind": "circle", "center": [3.0, 0.0], "radius": 1.0}, 64)
    near = sample_curve({"kind": "circle", "radius": 0.4}, 64)
    assert lifted_partition([inner, outer], far)[0] == 0.0
    assert lifted_partition([inner, outer], far)[1] == 1.0
    assert lifted_partition([inner, outer], near)[1] == 0.0


def test_annulus_gradients_fd():
    inner, outer = annulus_partition()
    gamma = random_loop(7, 2, 64, 4, 1.7)
    Y = random_tangent(8, 2, 64, 4)
    h = 1e-6
    for lf in (inner, outer):
        fd = (lift_function(lf, gamma.translate(Y, h)) - lift_function(lf, gamma.translate(Y, -h))) / (2 * h)
        assert abs(lift_function_derivative(lf, gamma, Y) - fd) <= 1e-7


def test_catalogs():
    assert set(DEFAULT_FUNCTIONS) <= set(FUNCTION_CATALOG)
    assert len(builtin_partition("annulus")) == 2
    with pytest.raises(KeyError):
        builtin_function("cubic")
    assert isinstance(builtin_function("trig"), LiftedFunction)

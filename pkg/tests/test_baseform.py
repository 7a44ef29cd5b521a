import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from loopdarboux.baseform import (FORM_CATALOG, POTENTIAL_CATALOG, FormField, OneFormField, ball_points, bump,
                                  builtin_form, certify_form, check_closed_fd, check_nondegenerate,
                                  compatible_J, coupling_potential, darboux_matrix, degenerate4d, eval_form,
                                  exterior_derivative_matrix, nonclosed4d, potential_form, probe_radius,
                                  quadratic2d, scaled2d, split4d, standard_form, standard_J)
from loopdarboux.errors import DomainError

from oracles import darboux_block, fd_jacobian

vec = lambda n: hnp.arrays(float, n, elements=st.floats(-2, 2))
SYMPLECTIC = [k for k, e in FORM_CATALOG.items() if not e.control]


def test_standard_form_matrix():
    np.testing.assert_array_equal(standard_form(2).matrix([0.0, 0.0]), [[0, 1], [-1, 0]])
    for n in (2, 4, 6):
        np.testing.assert_array_equal(darboux_matrix(n), darboux_block(n))
    assert standard_form(4).domain_radius == np.inf


def test_standard_form_values():
    assert eval_form(standard_form(2), [0.3, 0.1], [1, 0], [0, 1]) == 1.0
    e = np.eye(4)
    assert eval_form(standard_form(4), np.zeros(4), e[0], e[2]) == 0.0


def test_odd_dimension_rejected():
    with pytest.raises(ValueError):
        standard_form(3)
    with pytest.raises(ValueError):
        standard_J(5)


def test_quadratic_form_value():
    assert eval_form(quadratic2d(), [1.0, 0.0], [1, 0], [0, 1]) == 2.0
    assert abs(check_nondegenerate(quadratic2d(), [1.0, 0.0]) - 2.0) <= 1e-14


def test_eval_outside_ball():
    with pytest.raises(DomainError):
        eval_form(scaled2d(), [3.0, 0.0], [1, 0], [0, 1])


def test_constructor_antisymmetrises():
    raw = FormField(2, lambda x: np.array([[1.0, 3.0], [1.0, 2.0]]))
    A = raw.matrix(np.zeros(2))
    np.testing.assert_array_equal(A, -A.T)
    np.testing.assert_array_equal(A, [[0.0, 1.0], [-1.0, 0.0]])


@pytest.mark.parametrize("name", list(FORM_CATALOG))
@given(data=st.data())
def test_eval_bilinear_antisymmetric(name, data):
    form = builtin_form(name)
    n = form.n
    x = ball_points(data.draw(st.integers(0, 10**6)), n, 1, probe_radius(form.domain_radius))[0]
    u, v, w = (data.draw(vec(n)) for _ in range(3))
    a, b = data.draw(st.floats(-3, 3)), data.draw(st.floats(-3, 3))
    eps = 1e-15 * (1 + np.abs(form.matrix(x)).max()) * (1 + np.abs(u).sum()) * (1 + np.abs(v).sum())
    assert abs(eval_form(form, x, u, u)) <= eps
    assert abs(eval_form(form, x, u, v) + eval_form(form, x, v, u)) <= eps
    lhs = eval_form(form, x, a * u + b * w, v)
    rhs = a * eval_form(form, x, u, v) + b * eval_form(form, x, w, v)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(a) + abs(b)) * 16


def test_closed_standard_and_2d():
    rng = np.random.default_rng(0)
    u, v, w = rng.uniform(-1, 1, (3, 4))
    assert abs(check_closed_fd(standard_form(4), np.zeros(4), u, v, w)) <= 1e-12
    # every 2-form on R^2 is closed, including an arbitrary non-symplectic one
    arb = FormField(2, lambda x: np.sin(x[..., 0] * x[..., 1])[..., None, None] * darboux_matrix(2))
    u, v, w = rng.uniform(-1, 1, (3, 2))
    assert abs(check_closed_fd(arb, rng.uniform(-1, 1, 2), u, v, w)) <= 1e-8


def test_nonclosed_control():
    e = np.eye(4)
    for x in ([0.1, 0.2, 0.3, 0.4], [0.0, 0.0, -0.5, 0.0]):
        assert abs(check_closed_fd(nonclosed4d(), np.array(x), e[0], e[1], e[2]) - 1.0) <= 1e-6


@given(data=st.data())
def test_closed_residual_alternating(data):
    form = nonclosed4d()
    x = ball_points(data.draw(st.integers(0, 10**6)), 4, 1, 1.0)[0]
    u, v, w = (data.draw(vec(4)) for _ in range(3))
    r = check_closed_fd(form, x, u, v, w)
    assert abs(check_closed_fd(form, x, v, u, w) + r) <= 1e-6
    assert abs(check_closed_fd(form, x, u, w, v) + r) <= 1e-6
    assert abs(check_closed_fd(form, x, w, u, v) - r) <= 1e-6


def test_closed_probes_must_stay_inside():
    with pytest.raises(DomainError):
        check_closed_fd(scaled2d(), [1.99995, 0.0], [1.0, 0.0], [0, 1.0], [1.0, 1.0])


def test_nondegenerate_examples():
    assert abs(check_nondegenerate(standard_form(2), [5.0, -1.0]) - 1.0) <= 1e-15
    zero_row = FormField(2, lambda x: np.zeros((2, 2)))
    assert check_nondegenerate(zero_row, [0.0, 0.0]) == 0.0
    assert check_nondegenerate(degenerate4d(), np.zeros(4)) <= 1e-15


@pytest.mark.parametrize("name", SYMPLECTIC)
def test_builtin_forms_certified(name):
    cert = certify_form(builtin_form(name), seed=1, probes=100)
    assert cert.max_closed_residual <= 1e-6
    assert cert.min_singular_value > 0
    assert cert.passed


def test_controls_fail_certification():
    assert not certify_form(nonclosed4d(), seed=1).passed
    assert not certify_form(degenerate4d(), seed=1).passed


def test_standard_J():
    J = standard_J(2).matrix(np.zeros(2))
    np.testing.assert_array_equal(J, [[0, -1], [1, 0]])
    J4 = standard_J(4).matrix(np.zeros(4))
    np.testing.assert_array_equal(J4 @ J4, -np.eye(4))


@given(vec(4))
def test_standard_J_tames(u):
    A, J = darboux_matrix(4), standard_J(4).matrix(np.zeros(4))
    assert abs(u @ A @ (J @ u) - u @ u) <= 1e-12 * (1 + u @ u)


@pytest.mark.parametrize("name", SYMPLECTIC)
def test_compatible_triple(name):
    form = builtin_form(name)
    J = compatible_J(form)
    x = ball_points(4, form.n, 100, probe_radius(form.domain_radius))
    A, Jx = form.matrix(x), J.matrix(x)
    np.testing.assert_allclose(Jx @ Jx, -np.broadcast_to(np.eye(form.n), Jx.shape), atol=1e-12)
    rng = np.random.default_rng(9)
    u, v = rng.uniform(-1, 1, (2, 100, form.n))
    Ju, Jv = np.einsum("pij,pj->pi", Jx, u), np.einsum("pij,pj->pi", Jx, v)
    inv = np.einsum("pi,pij,pj->p", Ju, A, Jv) - np.einsum("pi,pij,pj->p", u, A, v)
    assert np.abs(inv).max() <= 1e-10
    c = np.einsum("pi,pij,pj->p", u, A, Ju) / np.einsum("pi,pi->p", u, u)
    assert c.min() > 0


def test_bump_support():
    assert bump(0.0) == 1.0
    assert bump(1.0) == 0.0 and bump(4.0) == 0.0
    assert 0 < bump(0.99) < 1e-40


def test_scaled2d_weight_bounds():
    A = scaled2d(amplitude=0.5).matrix(ball_points(0, 2, 500, 2.0))
    w = A[:, 0, 1]
    assert w.min() >= 1.0 and w.max() <= 1.5
    with pytest.raises(ValueError):
        scaled2d(amplitude=-0.6)


def test_exterior_derivative_matches_fd():
    beta = coupling_potential(0.2)
    x = np.array([0.3, -0.7, 0.2, 0.5])
    Jb = fd_jacobian(beta, x)  # Jb[j, i] = d beta_j / d x_i
    np.testing.assert_allclose(exterior_derivative_matrix(beta, x), Jb.T - Jb, atol=1e-9)


def test_numeric_jacobian_fallback():
    beta = coupling_potential(0.2)
    plain = OneFormField(4, beta.evaluator)
    x = ball_points(2, 4, 10, 1.5)
    np.testing.assert_allclose(plain.jac(x), beta.jac(x), atol=1e-9)


def test_split4d_is_exact_perturbation():
    x = ball_points(8, 4, 20, 1.5)
    np.testing.assert_allclose(split4d().matrix(x), potential_form("coupling4d", eps=0.2).matrix(x), atol=0)
    with pytest.raises(ValueError):
        split4d(eps=0.6, domain_radius=2.0)


def test_split4d_pfaffian_lower_bound():
    # Pf = 1 + 2 eps^2 x1 cos x2, so det = Pf^2 >= (1 - 2 eps^2 R)^2 on the ball
    x = ball_points(3, 4, 400, 2.0)
    det = np.linalg.det(split4d().matrix(x))
    assert det.min() >= (1 - 2 * 0.04 * 2.0) ** 2 - 1e-12


def test_catalog_anchors():
    for table in (FORM_CATALOG, POTENTIAL_CATALOG):
        for name, entry in table.items():
            assert entry.anchor and entry.doc
    assert {"standard", "scaled2d", "split4d"} <= set(FORM_CATALOG)
    with pytest.raises(KeyError):
        builtin_form("nope")

"""Symplectic 2-forms on (balls in) R^n and compatible almost complex structures.

A 2-form is represented by a matrix-valued evaluator x -> A(x) with
omega_x(u, v) = u^T A(x) v.  Evaluators are vectorised: they take points
of shape (..., n) and return matrices of shape (..., n, n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError

FD_STEP = 1e-4
CLOSED_TOL = 1e-6

MatrixFn = Callable[[np.ndarray], np.ndarray]


def _check_ball(x: np.ndarray, radius: float, what: str) -> None:
    if math.isinf(radius):
        return
    r2 = np.einsum("...i,...i->...", x, x)
    if np.any(r2 > (radius * (1 + 1e-12)) ** 2):
        raise DomainError(f"{what}: point at |x|={np.sqrt(r2.max()):.6g} "
                          f"outside domain ball of radius {radius:g}")


def _antisym(M: np.ndarray) -> np.ndarray:
    # fl(a - b) == -fl(b - a), so the result is antisymmetric to the bit
    return 0.5 * (M - np.swapaxes(M, -1, -2))


@dataclass(frozen=True, eq=False)
class FormField:
    """A 2-form on R^n given by its coefficient matrix evaluator.

    The stored evaluator is antisymmetrised on every call, so
    ``matrix(x)`` is exactly antisymmetric whatever the raw evaluator does.
    Builtins whose evaluators are antisymmetric by construction set
    ``antisymmetric=True`` to skip that pass.
    """

    n: int
    evaluator: MatrixFn
    domain_radius: float = math.inf
    name: str = "custom"
    antisymmetric: bool = False

    def matrix(self, x, check_domain: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"point dimension {x.shape[-1]} != form dimension {self.n}")
        if check_domain:
            _check_ball(x, self.domain_radius, f"form {self.name!r}")
        A = np.broadcast_to(np.asarray(self.evaluator(x), dtype=float), x.shape[:-1] + (self.n, self.n))
        return A if self.antisymmetric else _antisym(A)

    def require_inside(self, x) -> None:
        _check_ball(np.asarray(x, dtype=float), self.domain_radius, f"form {self.name!r}")

    def contains(self, x) -> bool:
        if math.isinf(self.domain_radius):
            return True
        return bool(np.all(np.linalg.norm(np.asarray(x, dtype=float), axis=-1) <= self.domain_radius))


@dataclass(frozen=True, eq=False)
class OneFormField:
    """A 1-form beta, with optional Jacobian evaluator jac[..., j, i] = d beta_j / d x_i."""

    n: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "custom"

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)

    def jac(self, x, h: float = 1e-6) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(x), dtype=float)
        cols = []
        for i in range(self.n):
            e = np.zeros(self.n)
            e[i] = h
            cols.append((self(x + e) - self(x - e)) / (2 * h))
        return np.stack(cols, axis=-1)


@dataclass(frozen=True, eq=False)
class AlmostComplexStructure:
    n: int
    evaluator: MatrixFn
    name: str = "custom"

    def matrix(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        J = np.asarray(self.evaluator(x), dtype=float)
        return np.broadcast_to(J, x.shape[:-1] + (self.n, self.n))


def _require_even(n: int) -> None:
    if n <= 0 or n % 2:
        raise ValueError(f"symplectic dimension must be a positive even integer, got {n}")


def darboux_matrix(n: int) -> np.ndarray:
    """A0 with omega0(u, v) = sum_i u_{2i-1} v_{2i} - u_{2i} v_{2i-1} (1-based pairs)."""
    _require_even(n)
    A = np.zeros((n, n))
    for i in range(0, n, 2):
        A[i, i + 1] = 1.0
        A[i + 1, i] = -1.0
    return A


def standard_form(n: int = 2) -> FormField:
    A0 = darboux_matrix(n)
    A0.setflags(write=False)
    return FormField(n, lambda x: A0, math.inf, "standard", antisymmetric=True)


def standard_J(n: int) -> AlmostComplexStructure:
    # J0 e_{2i-1} = e_{2i}, J0 e_{2i} = -e_{2i-1}; equals A0^{-1} = -A0
    J0 = -darboux_matrix(n)
    J0.setflags(write=False)
    return AlmostComplexStructure(n, lambda x: J0, "standard")


def compatible_J(form: FormField) -> AlmostComplexStructure:
    """Polar-decomposition structure J = A^{-1} (A^T A)^{1/2}.

    With respect to the Euclidean metric this J satisfies J^2 = -I,
    J^T A J = A and A J symmetric positive definite, so it is compatible
    with ``form`` wherever A(x) is invertible.
    """

    def evaluator(x):
        A = form.matrix(x)
        lam, V = np.linalg.eigh(np.swapaxes(A, -1, -2) @ A)
        P = (V * np.sqrt(np.clip(lam, 0.0, None))[..., None, :]) @ np.swapaxes(V, -1, -2)
        return np.linalg.solve(A, P)

    return AlmostComplexStructure(form.n, evaluator, f"compatible[{form.name}]")


def eval_form(form: FormField, x, u, v) -> float | np.ndarray:
    """omega_x(u, v) = u^T A(x) v; broadcasts over leading axes."""
    A = form.matrix(x)
    out = np.einsum("...i,...ij,...j->...", np.asarray(u, float), A, np.asarray(v, float))
    return float(out) if np.ndim(out) == 0 else out


def check_closed_fd(form: FormField, x, u, v, w, h: float = FD_STEP) -> float | np.ndarray:
    """Central-difference d(omega)_x(u, v, w) for constant vectors u, v, w.

    D_u[omega(v,w)] - D_v[omega(u,w)] + D_w[omega(u,v)]; the bracket terms
    of the invariant formula vanish for constant coefficient vectors.
    """
    x, u, v, w = (np.asarray(a, dtype=float) for a in (x, u, v, w))

    def D(d, a, b):
        return (eval_form(form, x + h * d, a, b) - eval_form(form, x - h * d, a, b)) / (2 * h)

    return D(u, v, w) - D(v, u, w) + D(w, u, v)


def check_nondegenerate(form: FormField, x) -> float | np.ndarray:
    """Smallest singular value of A(x)."""
    s = np.linalg.svd(form.matrix(x), compute_uv=False)[..., -1]
    return float(s) if np.ndim(s) == 0 else s


def ball_points(seed: int, n: int, count: int, radius: float) -> np.ndarray:
    """``count`` points uniformly distributed in the closed ball of given radius."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.uniform(0.0, 1.0, count) ** (1.0 / n)
    return g * r[:, None]


def probe_radius(domain_radius: float, fraction: float = 0.8, fallback: float = 1.0) -> float:
    """Radius of the probe region: a fraction of the domain ball, or ``fallback`` if unbounded."""
    return fallback if math.isinf(domain_radius) else fraction * domain_radius


@dataclass(frozen=True)
class FormCertificate:
    name: str
    probes: int
    max_closed_residual: float
    min_singular_value: float
    closed_tol: float = CLOSED_TOL

    @property
    def passed(self) -> bool:
        return self.max_closed_residual <= self.closed_tol and self.min_singular_value > 0.0


def certify_form(form: FormField, seed: int = 0, probes: int = 100, h: float = FD_STEP) -> FormCertificate:
    """Closedness and nondegeneracy at seeded probe points inside the domain ball."""
    rng = np.random.default_rng(seed)
    R = probe_radius(form.domain_radius)
    x = ball_points(int(rng.integers(2**31)), form.n, probes, R)
    uvw = rng.uniform(-1.0, 1.0, (3, probes, form.n))
    res = np.abs(check_closed_fd(form, x, *uvw, h=h))
    smin = check_nondegenerate(form, x)
    return FormCertificate(form.name, probes, float(res.max()), float(np.min(smin)))


# ---------------------------------------------------------------------------
# builtin forms


def bump(r2) -> np.ndarray:
    """Smooth bump exp(1 - 1/(1 - r2)) on r2 < 1, exactly 0 elsewhere; value 1 at 0."""
    d = 1.0 - np.asarray(r2, dtype=float)
    with np.errstate(divide="ignore"):
        # d <= 0 maps to exp(-inf) == 0 exactly
        return np.exp(1.0 - 1.0 / np.maximum(d, 0.0))


def scaled_form(weight: Callable[[np.ndarray], np.ndarray], n: int = 2, *,
                domain_radius: float = math.inf, name: str = "scaled") -> FormField:
    """weight(x) * omega0."""
    A0 = darboux_matrix(n)
    return FormField(n, lambda x: weight(x)[..., None, None] * A0, domain_radius, name, antisymmetric=True)


def bump_weight(amplitude: float, support: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: 1.0 + amplitude * bump(np.sum(x * x, axis=-1) / support**2)


def scaled2d(amplitude: float = 0.5, support: float = 2.0) -> FormField:
    """(1 + a*bump(|x|/R)) dx^dy, certified on the ball of radius R."""
    if amplitude <= -0.5:
        raise ValueError("amplitude must exceed -1/2 so that the weight stays above 1/2")
    return scaled_form(bump_weight(amplitude, support), 2, domain_radius=support, name="scaled2d")


def quadratic2d(domain_radius: float = 2.0) -> FormField:
    """(1 + x1^2) dx^dy."""
    return scaled_form(lambda x: 1.0 + x[..., 0] ** 2, 2, domain_radius=domain_radius, name="quadratic2d")


def coupling_potential(eps: float = 0.2) -> OneFormField:
    """beta = eps * (sin(x2) dx3 + x1^2 dx4) on R^4."""

    def beta(x):
        out = np.zeros(x.shape)
        out[..., 2] = eps * np.sin(x[..., 1])
        out[..., 3] = eps * x[..., 0] ** 2
        return out

    def jac(x):
        out = np.zeros(x.shape + (4,))
        out[..., 2, 1] = eps * np.cos(x[..., 1])
        out[..., 3, 0] = 2 * eps * x[..., 0]
        return out

    return OneFormField(4, beta, jac, "coupling4d")


def exterior_derivative_matrix(beta: OneFormField, x) -> np.ndarray:
    """Matrix of d(beta): entry (i, j) is d_i beta_j - d_j beta_i."""
    Jb = beta.jac(x)
    return np.swapaxes(Jb, -1, -2) - Jb


def exact_perturbation(beta: OneFormField, *, scale: float = 1.0, domain_radius: float = math.inf,
                       name: str | None = None) -> FormField:
    """omega0 + scale * d(beta); closed by construction."""
    A0 = darboux_matrix(beta.n)
    return FormField(beta.n, lambda x: A0 + scale * exterior_derivative_matrix(beta, x),
                     domain_radius, name or f"standard+d[{beta.name}]", antisymmetric=True)


def split4d(eps: float = 0.2, domain_radius: float = 2.0) -> FormField:
    """omega0 + d(eps(sin x2 dx3 + x1^2 dx4)) on R^4.

    Its Pfaffian is 1 + 2 eps^2 x1 cos(x2) >= 1 - 2 eps^2 R on the ball.
    """
    if 2 * eps**2 * domain_radius >= 1:
        raise ValueError("split4d requires 2*eps^2*radius < 1 for nondegeneracy")
    return exact_perturbation(coupling_potential(eps), domain_radius=domain_radius, name="split4d")


def nonclosed4d(domain_radius: float = 2.0) -> FormField:
    """Control: x3 dx1^dx2 on R^4, with d(omega) = dx3^dx1^dx2 (not closed, degenerate)."""

    def evaluator(x):
        A = np.zeros(x.shape + (4,))
        A[..., 0, 1] = x[..., 2]
        A[..., 1, 0] = -x[..., 2]
        return A

    return FormField(4, evaluator, domain_radius, "nonclosed4d", antisymmetric=True)


def degenerate4d() -> FormField:
    """Control: dx1^dx2 on R^4, rank 2."""
    A = np.zeros((4, 4))
    A[0, 1], A[1, 0] = 1.0, -1.0
    A.setflags(write=False)
    return FormField(4, lambda x: A, math.inf, "degenerate4d", antisymmetric=True)


@dataclass(frozen=True)
class CatalogEntry:
    factory: Callable[..., object]
    params: dict
    anchor: str
    doc: str
    control: bool = False
    extra: dict = field(default_factory=dict)


FORM_CATALOG: dict[str, CatalogEntry] = {
    "standard": CatalogEntry(standard_form, {"n": "even int (2)"}, "Darboux normal form omega0 = sum dx_i^dy_i",
                             "constant omega0"),
    "scaled2d": CatalogEntry(scaled2d, {"amplitude": "float > -1/2 (0.5)", "support": "float (2.0)"},
                             "base symplectic manifold (M, omega)", "(1 + a bump) dx^dy on R^2"),
    "quadratic2d": CatalogEntry(quadratic2d, {"domain_radius": "float (2.0)"},
                                "integrand omega_{gamma(t)}(X(t), Y(t)) of Omega^omega", "(1 + x1^2) dx^dy on R^2"),
    "split4d": CatalogEntry(split4d, {"eps": "float (0.2)", "domain_radius": "float (2.0)"},
                            "base symplectic manifold (M, omega)", "omega0 + d beta on R^4"),
    "nonclosed4d": CatalogEntry(nonclosed4d, {"domain_radius": "float (2.0)"},
                                "closedness d(Omega^omega) = 0, negative control", "x3 dx1^dx2 on R^4",
                                control=True),
    "degenerate4d": CatalogEntry(degenerate4d, {}, "nondegeneracy of Omega^omega, negative control",
                                 "dx1^dx2 on R^4", control=True),
}

POTENTIAL_CATALOG: dict[str, CatalogEntry] = {
    "coupling4d": CatalogEntry(coupling_potential, {"eps": "float (0.2)"},
                               "custom forms omega0 + d beta", "eps (sin x2 dx3 + x1^2 dx4)"),
}


def builtin_form(name: str, **params) -> FormField:
    if name not in FORM_CATALOG:
        raise KeyError(f"unknown form {name!r}; known: {sorted(FORM_CATALOG)}")
    return FORM_CATALOG[name].factory(**params)


def potential_form(potential: str, *, scale: float = 1.0, domain_radius: float = math.inf,
                   **params) -> FormField:
    """Custom form omega0 + scale * d(beta) with beta a builtin potential."""
    if potential not in POTENTIAL_CATALOG:
        raise KeyError(f"unknown potential {potential!r}; known: {sorted(POTENTIAL_CATALOG)}")
    beta = POTENTIAL_CATALOG[potential].factory(**params)
    return exact_perturbation(beta, scale=scale, domain_radius=domain_radius)

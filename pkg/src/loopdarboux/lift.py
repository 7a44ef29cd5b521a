"""Loop-space constructions built pointwise from data on R^n.

Omega(X, Y) at a loop gamma integrates omega_{gamma(t)}(X(t), Y(t)) over
the period; isotopies, almost complex structures and Hamiltonian fields
lift by acting on every sample of the loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .baseform import AlmostComplexStructure, FormField
from .errors import DegenerateFormError, PartitionError
from .loopcore import LoopGrid, TangentField, check_compatible, quad_integral
from .moser import IsotopyFlow

PARTITION_TOL = 1e-12


def omega_loop(form: FormField, gamma: LoopGrid, X: TangentField, Y: TangentField) -> float:
    """Omega^omega_gamma(X, Y) by periodic trapezoid quadrature."""
    check_compatible(gamma, X, Y)
    A = form.matrix(gamma.values)
    return quad_integral(np.einsum("ki,kij,kj->k", X.values, A, Y.values))


def omega_gram(form: FormField, gamma: LoopGrid, fields: np.ndarray) -> np.ndarray:
    """Matrix of pairings Omega(b_i, b_j) for stacked fields of shape (K, N, n)."""
    A = form.matrix(gamma.values)
    AB = np.einsum("kpq,jkq->jkp", A, fields)
    return np.einsum("ikp,jkp->ij", fields, AB) / gamma.N


# ---------------------------------------------------------------------------
# lifted isotopies


def lift_tangent_map(flow: IsotopyFlow, s: float, gamma: LoopGrid) -> tuple[LoopGrid, np.ndarray]:
    """The lifted loop phi_s o gamma together with the Jacobians Dphi_s(gamma(t_k))."""
    phi, D = flow.evaluate(s, gamma.values)
    return LoopGrid(phi), D


def apply_jacobians(D: np.ndarray, X: TangentField) -> TangentField:
    return TangentField(np.einsum("kij,kj->ki", D, X.values))


def lift_map(flow: IsotopyFlow, s: float, gamma: LoopGrid) -> LoopGrid:
    return lift_tangent_map(flow, s, gamma)[0]


def lift_derivative(flow: IsotopyFlow, s: float, gamma: LoopGrid, X: TangentField) -> TangentField:
    """d(phi^L_s)(gamma)(X): row k is Dphi_s(gamma_k) X_k."""
    check_compatible(gamma, X)
    return apply_jacobians(lift_tangent_map(flow, s, gamma)[1], X)


@dataclass(frozen=True, eq=False)
class LiftedIsotopy:
    """phi^L(s, gamma) = phi_s o gamma for a base Moser isotopy."""

    flow: IsotopyFlow

    def apply(self, s: float, gamma: LoopGrid) -> LoopGrid:
        return lift_map(self.flow, s, gamma)

    def derivative(self, s: float, gamma: LoopGrid, X: TangentField) -> TangentField:
        return lift_derivative(self.flow, s, gamma, X)


# ---------------------------------------------------------------------------
# lifted functions and sigma-gradients


@dataclass(frozen=True, eq=False)
class LiftedFunction:
    """A smooth f: R^n -> R with gradient; lifts to f~(gamma) = int f(gamma(t)) dt.

    The form used for Hamiltonian fields is passed to the operations
    explicitly rather than stored here.
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    min_dim: int = 1

    def __call__(self, gamma: LoopGrid) -> float:
        return lift_function(self, gamma)


def lift_function(lf: LiftedFunction, gamma: LoopGrid) -> float:
    return quad_integral(lf.f(gamma.values))


def lift_function_derivative(lf: LiftedFunction, gamma: LoopGrid, X: TangentField) -> float:
    """df~_gamma(X) = int <grad f(gamma(t)), X(t)> dt."""
    check_compatible(gamma, X)
    return quad_integral(np.einsum("ki,ki->k", lf.grad(gamma.values), X.values))


def hamiltonian_field(form: FormField, lf: LiftedFunction, x) -> np.ndarray:
    """X_f(x) with omega(X_f, .) = df, i.e. A(x)^T X_f = grad f(x); vectorised over x."""
    x = np.asarray(x, dtype=float)
    A = form.matrix(x)
    g = np.asarray(lf.grad(x), dtype=float)
    try:
        return np.linalg.solve(np.swapaxes(A, -1, -2), g[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise DegenerateFormError(f"form {form.name!r} is singular; no Hamiltonian field") from exc


def sigma_gradient_lift(form: FormField, lf: LiftedFunction, gamma: LoopGrid) -> TangentField:
    """The associated loop field t -> X_f(gamma(t)), a sigma-gradient of f~."""
    return TangentField(hamiltonian_field(form, lf, gamma.values))


def lift_J(J: AlmostComplexStructure, gamma: LoopGrid, X: TangentField) -> TangentField:
    check_compatible(gamma, X)
    return TangentField(np.einsum("kij,kj->ki", J.matrix(gamma.values), X.values))


def lifted_partition(bumps: Sequence[LiftedFunction], gamma: LoopGrid,
                     tol: float = PARTITION_TOL) -> list[float]:
    """Lift a partition of unity f_a to the loop weights f^_a(gamma) = int f_a(gamma(t)) dt.

    Sum-to-one is certified at the samples of gamma, the only points that
    enter the computation.
    """
    vals = np.stack([np.asarray(b.f(gamma.values), dtype=float) for b in bumps])
    defect = np.abs(vals.sum(axis=0) - 1.0)
    if defect.max() > tol:
        k = int(defect.argmax())
        raise PartitionError(f"partition sums to {vals[:, k].sum()!r} at sample {k}")
    return [quad_integral(v) for v in vals]


# ---------------------------------------------------------------------------
# builtin functions and partitions


def _coord(i: int) -> LiftedFunction:
    def f(x):
        return x[..., i]

    def grad(x):
        g = np.zeros(x.shape)
        g[..., i] = 1.0
        return g

    return LiftedFunction(f"coord{i + 1}", f, grad, i + 1)


def _linear(a) -> LiftedFunction:
    a = np.asarray(a, dtype=float)
    return LiftedFunction("linear", lambda x: x @ a, lambda x: np.broadcast_to(a, x.shape).copy(), len(a))


def _constant(c: float) -> LiftedFunction:
    return LiftedFunction("constant", lambda x: np.full(x.shape[:-1], float(c)), np.zeros_like)


def _square1() -> LiftedFunction:
    def grad(x):
        g = np.zeros(x.shape)
        g[..., 0] = 2 * x[..., 0]
        return g

    return LiftedFunction("square1", lambda x: x[..., 0] ** 2, grad)


def _energy() -> LiftedFunction:
    return LiftedFunction("energy", lambda x: 0.5 * np.sum(x * x, axis=-1), lambda x: np.array(x, dtype=float))


def _gaussian() -> LiftedFunction:
    def f(x):
        return np.exp(-np.sum(x * x, axis=-1))

    return LiftedFunction("gaussian", f, lambda x: -2 * x * f(x)[..., None])


def _trig() -> LiftedFunction:
    def f(x):
        return np.sin(x[..., 0]) * np.cos(x[..., 1])

    def grad(x):
        g = np.zeros(x.shape)
        g[..., 0] = np.cos(x[..., 0]) * np.cos(x[..., 1])
        g[..., 1] = -np.sin(x[..., 0]) * np.sin(x[..., 1])
        return g

    return LiftedFunction("trig", f, grad, 2)


def _h(t):
    """exp(-1/t) for t > 0, exactly 0 otherwise."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return np.exp(-1.0 / np.maximum(t, 0.0))


def _dh(t):
    t = np.asarray(t, dtype=float)
    pos = t > 0
    safe = np.where(pos, t, 1.0)
    return np.where(pos, np.exp(-1.0 / safe) / safe**2, 0.0)


def annulus_partition(inner: float = 0.5, outer: float = 1.5) -> tuple[LiftedFunction, LiftedFunction]:
    """Two-member radial partition of unity on R^n.

    The first member is 1 on |x| <= inner and supported in |x| < outer; the
    second is supported in |x| > inner.  Both vanish exactly off their
    supports and sum to one up to rounding.
    """
    if not 0 < inner < outer:
        raise ValueError("need 0 < inner < outer")

    def parts(x):
        r = np.sqrt(np.sum(x * x, axis=-1))
        p, q = _h(outer - r), _h(r - inner)
        return r, p, q

    def grads(x):
        r, p, q = parts(x)
        dp, dq = -_dh(outer - r), _dh(r - inner)
        dfr = (dp * q - p * dq) / (p + q) ** 2
        safe = np.where(r > 0, r, 1.0)
        radial = np.where(r > 0, dfr / safe, 0.0)[..., None] * x
        return radial

    def f_in(x):
        _, p, q = parts(x)
        return p / (p + q)

    def f_out(x):
        _, p, q = parts(x)
        return q / (p + q)

    return (LiftedFunction("annulus.inner", f_in, grads),
            LiftedFunction("annulus.outer", f_out, lambda x: -grads(x)))


FUNCTION_CATALOG: dict[str, tuple[Callable[..., LiftedFunction], dict, str]] = {
    "coord1": (lambda: _coord(0), {}, "lifted function f~(gamma) = int f(gamma(t)) dt"),
    "coord2": (lambda: _coord(1), {}, "lifted function f~(gamma) = int f(gamma(t)) dt"),
    "linear": (_linear, {"a": "vector"}, "lifted function f~(gamma) = int f(gamma(t)) dt"),
    "constant": (_constant, {"c": "float"}, "lifted function f~(gamma) = int f(gamma(t)) dt"),
    "square1": (_square1, {}, "lifted function f~(gamma) = int f(gamma(t)) dt"),
    "energy": (_energy, {}, "lifted function f~(gamma) = int f(gamma(t)) dt"),
    "gaussian": (_gaussian, {}, "lifted function f~(gamma) = int f(gamma(t)) dt"),
    "trig": (_trig, {}, "lifted function f~(gamma) = int f(gamma(t)) dt"),
}

PARTITION_CATALOG = {
    "annulus": (annulus_partition, {"inner": "float (0.5)", "outer": "float (1.5)"},
                "lifted partition of unity f^_a(gamma) = int f_a(gamma(t)) dt in C^inf_sigma"),
}

DEFAULT_FUNCTIONS = ("coord1", "coord2", "square1", "energy", "gaussian", "trig")


def builtin_function(name: str, **params) -> LiftedFunction:
    if name not in FUNCTION_CATALOG:
        raise KeyError(f"unknown lifted function {name!r}; known: {sorted(FUNCTION_CATALOG)}")
    return FUNCTION_CATALOG[name][0](**params)


def builtin_partition(name: str, **params) -> tuple[LiftedFunction, ...]:
    if name not in PARTITION_CATALOG:
        raise KeyError(f"unknown partition {name!r}; known: {sorted(PARTITION_CATALOG)}")
    return PARTITION_CATALOG[name][0](**params)

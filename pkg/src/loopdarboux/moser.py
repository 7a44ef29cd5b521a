"""Moser's trick on balls in R^n.

Given a path of symplectic forms omega_s with d/ds omega_s = eta_s, pick
the radial primitive alpha_s of eta_s (so d alpha_s = eta_s) and flow
along v_s defined by iota_{v_s} omega_s = -alpha_s.  The flow phi_s then
satisfies phi_s^* omega_s = omega_0.  Jacobians of phi_s come from the
variational equation dJ/ds = Dv_s(phi_s(x)) J integrated alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .baseform import (FormField, ball_points, bump, coupling_potential, darboux_matrix,
                       exterior_derivative_matrix, probe_radius)
from .errors import DegenerateFormError, DomainError
from .reports import VerificationReport

DEFAULT_QUAD_NODES = 16
DEFAULT_STEPS = 1024
MIN_STEPS = 16
JAC_FD_STEP = 1e-5

FamilyFn = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class FormFamily:
    """A path s -> omega_s of 2-forms with its s-derivative eta_s.

    ``matrix_fn(s, x)`` gives A_s(x) and ``dmatrix_ds(s, x)`` gives
    d/ds A_s(x); both vectorised over leading axes of x.
    """

    n: int
    matrix_fn: FamilyFn
    dmatrix_ds: FamilyFn
    domain_radius: float = math.inf
    s_max: float = 1.0
    name: str = "custom"
    antisymmetric: bool = False
    quad_nodes: int = DEFAULT_QUAD_NODES

    def _check_s(self, s: float) -> None:
        if not (-1e-12 <= s <= self.s_max + 1e-12):
            raise ValueError(f"s={s} outside family range [0, {self.s_max}]")

    def form_at(self, s: float) -> FormField:
        self._check_s(s)
        return FormField(self.n, lambda x: self.matrix_fn(s, x), self.domain_radius,
                         f"{self.name}@s={s:g}", self.antisymmetric)

    def eta_at(self, s: float) -> FormField:
        self._check_s(s)
        return FormField(self.n, lambda x: self.dmatrix_ds(s, x), self.domain_radius,
                         f"d/ds {self.name}@s={s:g}", self.antisymmetric)


@lru_cache(maxsize=None)
def _unit_gauss(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    z, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (z + 1.0)
    return t, 0.5 * w


def homotopy_primitive(eta: FormField, x, quad_nodes: int = DEFAULT_QUAD_NODES) -> np.ndarray:
    """Radial primitive alpha(x)(v) = int_0^1 t eta_{tx}(x, v) dt, as a covector.

    Gauss-Legendre quadrature on [0, 1]; for closed eta, d(alpha) = eta on
    any ball about the origin containing x.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    eta.require_inside(x)  # the ball is star-shaped about 0, so t*x is inside too
    t, w = _unit_gauss(quad_nodes)
    pts = t[:, None] * x[..., None, :]
    H = eta.matrix(pts, check_domain=False)
    K = np.einsum("q,...qij->...ij", w * t, H)
    return np.einsum("...i,...ij->...j", x, K)


def moser_field(family: FormFamily, s: float, x, quad_nodes: int | None = None) -> np.ndarray:
    """v_s(x) solving A_s(x)^T v = -alpha_s(x), i.e. omega_s(v, .) = -alpha_s."""
    x = np.asarray(x, dtype=float)
    alpha = homotopy_primitive(family.eta_at(s), x, quad_nodes or family.quad_nodes)
    A = family.form_at(s).matrix(x)
    try:
        v = np.linalg.solve(np.swapaxes(A, -1, -2), -alpha[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise DegenerateFormError(f"{family.name}: singular form at s={s}") from exc
    if not np.all(np.isfinite(v)):
        raise DegenerateFormError(f"{family.name}: non-finite Moser field at s={s}")
    return v


def _field_and_jacobian(family: FormFamily, s: float, x: np.ndarray, h: float, quad_nodes: int):
    """v_s(x) and Dv_s(x) (central differences) from one stacked evaluation."""
    P, n = x.shape
    offs = h * np.eye(n)
    stack = np.concatenate([x[None], x[None] + offs[:, None, :], x[None] - offs[:, None, :]])
    v = moser_field(family, s, stack.reshape(-1, n), quad_nodes).reshape(2 * n + 1, P, n)
    # Dv[p, i, j] = d v_i / d x_j
    Dv = np.transpose((v[1:n + 1] - v[n + 1:]) / (2 * h), (1, 2, 0))
    return v[0], Dv


def _rk4_flow(family: FormFamily, x0, s_start: float, h: float, record: list[int],
              fd_step: float, quad_nodes: int | None) -> list[tuple[np.ndarray, np.ndarray]]:
    """Fixed-step RK4 from s_start with step h; returns the state after each count in ``record``."""
    x0 = np.asarray(x0, dtype=float)
    single = x0.ndim == 1
    x = np.atleast_2d(x0).copy()
    P, n = x.shape
    J = np.broadcast_to(np.eye(n), (P, n, n)).copy()
    quad_nodes = quad_nodes or family.quad_nodes
    R = family.domain_radius
    if not math.isinf(R) and np.any(np.linalg.norm(x, axis=1) > R):
        raise DomainError(f"{family.name}: initial point outside domain ball")

    def snapshot():
        return (x[0].copy(), J[0].copy()) if single else (x.copy(), J.copy())

    def rhs(s, x, J):
        v, Dv = _field_and_jacobian(family, s, x, fd_step, quad_nodes)
        return v, Dv @ J

    results = {0: snapshot()} if 0 in record else {}
    for k in range(max(record)):
        s = s_start + k * h
        k1x, k1J = rhs(s, x, J)
        k2x, k2J = rhs(s + h / 2, x + h / 2 * k1x, J + h / 2 * k1J)
        k3x, k3J = rhs(s + h / 2, x + h / 2 * k2x, J + h / 2 * k2J)
        k4x, k4J = rhs(s + h, x + h * k3x, J + h * k3J)
        x = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        J = J + h / 6 * (k1J + 2 * k2J + 2 * k3J + k4J)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(J))):
            raise FloatingPointError(f"{family.name}: non-finite flow state at s={s + h:g}")
        if not math.isinf(R) and np.any(np.linalg.norm(x, axis=1) > R):
            raise DomainError(f"{family.name}: trajectory left the domain ball at s={s + h:g}")
        if k + 1 in record:
            results[k + 1] = snapshot()
    return [results[r] for r in record]


def integrate_flow(family: FormFamily, x0, s_target: float, steps: int = DEFAULT_STEPS, *,
                   s_start: float = 0.0, fd_step: float = JAC_FD_STEP,
                   quad_nodes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 for the Moser flow and its variational equation.

    Returns (phi(x0), Dphi(x0)) for the flow from ``s_start`` to ``s_target``
    (which may be smaller, giving the reversed flow).  ``x0`` may be a
    single point (n,) or a batch (P, n).
    """
    if steps < MIN_STEPS:
        raise ValueError(f"need at least {MIN_STEPS} steps, got {steps}")
    if s_target == s_start:
        steps = 0
    (out,) = _rk4_flow(family, x0, s_start, (s_target - s_start) / max(steps, 1), [steps],
                       fd_step, quad_nodes)
    return out


@dataclass(frozen=True, eq=False)
class IsotopyFlow:
    """The Moser isotopy of a family, evaluated by fixed-step RK4.

    ``steps_per_unit`` fixes the step count per unit of s (never fewer
    than MIN_STEPS for s != 0).
    """

    family: FormFamily
    steps_per_unit: int = DEFAULT_STEPS
    method: str = "rk4"
    quad_nodes: int | None = None
    fd_step: float = JAC_FD_STEP

    def __post_init__(self):
        if self.method != "rk4":
            raise ValueError(f"unsupported integrator {self.method!r}")
        if self.quad_nodes is None:
            object.__setattr__(self, "quad_nodes", self.family.quad_nodes)

    def steps_for(self, s: float) -> int:
        if s == 0:
            return 0
        return max(MIN_STEPS, math.ceil(self.steps_per_unit * abs(s) - 1e-9))

    def settings(self) -> dict:
        return {"family": self.family.name, "steps_per_unit": self.steps_per_unit,
                "method": self.method, "quad_nodes": self.quad_nodes, "fd_step": self.fd_step}

    def with_steps(self, steps_per_unit: int) -> "IsotopyFlow":
        return IsotopyFlow(self.family, steps_per_unit, self.method, self.quad_nodes, self.fd_step)

    def evaluate(self, s: float, x) -> tuple[np.ndarray, np.ndarray]:
        """(phi_s(x), Dphi_s(x)); exactly (x, I) at s = 0."""
        (out,) = self.evaluate_many([s], x)
        return out

    def evaluate_many(self, s_values, x) -> list[tuple[np.ndarray, np.ndarray]]:
        """``evaluate`` at several s values sharing integrations.

        Values whose step sizes coincide are read off one run; this is
        bitwise identical to separate calls since the same steps are taken.
        """
        for s in s_values:
            self.family._check_s(s)
        groups: dict[float, list[float]] = {}
        for s in s_values:
            steps = self.steps_for(s)
            groups.setdefault(s / steps if steps else 0.0, []).append(s)
        out = {}
        for h, ss in groups.items():
            counts = [self.steps_for(s) for s in ss]
            states = _rk4_flow(self.family, x, 0.0, h, counts, self.fd_step, self.quad_nodes)
            out.update(zip(ss, states))
        return [out[s] for s in s_values]


@dataclass(frozen=True, eq=False)
class BaseProbes:
    points: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __len__(self) -> int:
        return len(self.points)


def base_probes(seed: int, n: int, count: int, radius: float) -> BaseProbes:
    rng = np.random.default_rng(seed)
    pts = ball_points(int(rng.integers(2**31)), n, count, radius)
    u = rng.uniform(-1.0, 1.0, (count, n))
    v = rng.uniform(-1.0, 1.0, (count, n))
    return BaseProbes(pts, u, v)


def verify_base_darboux(family: FormFamily, flow: IsotopyFlow, probes: BaseProbes, s: float,
                        tol: float = 1e-6) -> VerificationReport:
    """max |(Dphi u)^T A_s(phi(x)) (Dphi v) - u^T A_0(x) v| over the probes."""
    phi, D = flow.evaluate(s, probes.points)
    Du = np.einsum("pij,pj->pi", D, probes.u)
    Dv = np.einsum("pij,pj->pi", D, probes.v)
    lhs = np.einsum("pi,pij,pj->p", Du, family.form_at(s).matrix(phi), Dv)
    rhs = np.einsum("pi,pij,pj->p", probes.u, family.form_at(0.0).matrix(probes.points), probes.v)
    err = float(np.max(np.abs(lhs - rhs))) if len(probes) else 0.0
    return VerificationReport.build(
        f"base-darboux[{family.name}]@s={s:g}", len(probes), err, tol,
        {**flow.settings(), "s": s, "steps": flow.steps_for(s)},
    )


# ---------------------------------------------------------------------------
# builtin families


def standard_family(n: int = 2) -> FormFamily:
    """Constant path omega_s = omega0; the Moser flow is the identity."""
    A0 = darboux_matrix(n)
    zero = np.zeros((n, n))
    return FormFamily(n, lambda s, x: A0, lambda s, x: zero, math.inf, 1.0, "standard", True, 2)


def scaling_family(n: int = 2) -> FormFamily:
    """omega_s = (1 + s) omega0, flow phi_s(x) = x / sqrt(1 + s)."""
    A0 = darboux_matrix(n)
    # eta is constant, so two Gauss nodes integrate the primitive exactly
    return FormFamily(n, lambda s, x: (1.0 + s) * A0, lambda s, x: A0, math.inf, 1.0, "scaling", True, 2)


def scaled2d_family(amplitude: float = 0.5, support: float = 2.0) -> FormFamily:
    """omega_s = (1 + s a bump(|x|/R)) dx^dy on the ball of radius R."""
    A0 = darboux_matrix(2)

    def g(x):
        return amplitude * bump(np.sum(x * x, axis=-1) / support**2)[..., None, None]

    return FormFamily(2, lambda s, x: (1.0 + s * g(x)) * A0, lambda s, x: g(x) * A0,
                      support, 1.0, "scaled2d", True)


def split4d_family(eps: float = 0.2, domain_radius: float = 2.0) -> FormFamily:
    """omega_s = omega0 + s d(beta) on R^4 with the coupling potential beta."""
    if 2 * eps**2 * domain_radius >= 1:
        raise ValueError("split4d requires 2*eps^2*radius < 1 for nondegeneracy")
    beta = coupling_potential(eps)
    A0 = darboux_matrix(4)
    return FormFamily(4, lambda s, x: A0 + s * exterior_derivative_matrix(beta, x),
                      lambda s, x: exterior_derivative_matrix(beta, x), domain_radius, 1.0, "split4d", True,
                      quad_nodes=8)


FAMILY_CATALOG = {
    "standard": (standard_family, {"n": "even int (2)"}, "trivial isotopy phi_s = Id"),
    "scaling": (scaling_family, {"n": "even int (2)"},
                "pullback (phi^L)^* Omega^s = Omega^0 with closed-form base isotopy x/sqrt(1+s)"),
    "scaled2d": (scaled2d_family, {"amplitude": "float (0.5)", "support": "float (2.0)"},
                 "pullback (phi^L)^* Omega^s = Omega^0, Moser-constructed base isotopy"),
    "split4d": (split4d_family, {"eps": "float (0.2)", "domain_radius": "float (2.0)"},
                "pullback (phi^L)^* Omega^s = Omega^0 on R^4, Moser-constructed base isotopy"),
}


def builtin_family(name: str, **params) -> FormFamily:
    if name not in FAMILY_CATALOG:
        raise KeyError(f"unknown family {name!r}; known: {sorted(FAMILY_CATALOG)}")
    return FAMILY_CATALOG[name][0](**params)


def family_probe_radius(family: FormFamily) -> float:
    return probe_radius(family.domain_radius)

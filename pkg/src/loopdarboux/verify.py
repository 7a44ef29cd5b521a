"""Numerical certificates for the loop-space claims.

Every check is deterministic given its seeds and settings and returns a
:class:`~loopdarboux.reports.VerificationReport` (or a plain number for
the low-level residual operations).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .baseform import (AlmostComplexStructure, FormField, builtin_form, probe_radius,
                       quadratic2d, scaled2d)
from .errors import DomainError
from .lift import (LiftedFunction, apply_jacobians, lift_J, lift_function, lift_function_derivative,
                   lift_tangent_map, lifted_partition, omega_gram, omega_loop, sigma_gradient_lift)
from .loopcore import (DEFAULT_DECAY, FourierBasis, LoopGrid, TangentField, derive_seed,
                       fourier_basis, random_loop, random_tangent, sample_curve)
from .moser import FormFamily, IsotopyFlow, builtin_family
from .reports import VerificationReport

QUAD_TOL = 1e-10
FD_TOL = 1e-6
FLOW_TOL = 1e-6
FLOW_FLOOR = 1e-10
FD_STEP = 1e-4
HALVING_RATIO = 8.0

FieldPair = tuple[TangentField, TangentField]


# ---------------------------------------------------------------------------
# seeded probe batches

def probe_loops(seed: int, count: int, n: int, N: int, M: int, radius: float,
                decay: float = DEFAULT_DECAY) -> list[LoopGrid]:
    return [random_loop(derive_seed(seed, 1, i), n, N, M, radius, decay) for i in range(count)]


def probe_fields(seed: int, count: int, n: int, N: int, M: int,
                 decay: float = DEFAULT_DECAY) -> list[TangentField]:
    return [random_tangent(derive_seed(seed, 2, i), n, N, M, decay) for i in range(count)]


def probe_pairs(seed: int, count: int, n: int, N: int, M: int,
                decay: float = DEFAULT_DECAY) -> list[FieldPair]:
    f = probe_fields(seed, 2 * count, n, N, M, decay)
    return list(zip(f[::2], f[1::2]))


def _require_inside(form_or_radius, loops: Sequence[LoopGrid]) -> None:
    R = form_or_radius if isinstance(form_or_radius, float) else form_or_radius.domain_radius
    for i, g in enumerate(loops):
        if np.any(np.linalg.norm(g.values, axis=1) > R):
            raise DomainError(f"probe loop {i} leaves the domain ball of radius {R:g}")


# ---------------------------------------------------------------------------
# Darboux pullback on loop space

def _pullback_errors(family: FormFamily, s: float, loops, lifted, jacobians, pairs) -> np.ndarray:
    form_s, form_0 = family.form_at(s), family.form_at(0.0)
    errs = np.empty((len(loops), len(pairs)))
    for i, (gamma, phi_gamma, D) in enumerate(zip(loops, lifted, jacobians)):
        for j, (X, Y) in enumerate(pairs):
            lhs = omega_loop(form_s, phi_gamma, apply_jacobians(D, X), apply_jacobians(D, Y))
            errs[i, j] = abs(lhs - omega_loop(form_0, gamma, X, Y))
    return errs


def pullback_errors_many(family: FormFamily, flow: IsotopyFlow, s_values: Sequence[float],
                         loops: Sequence[LoopGrid], pairs: Sequence[FieldPair]) -> list[np.ndarray]:
    """Per-(loop, pair) pullback defects at each s, sharing one flow integration."""
    _require_inside(float(family.domain_radius), loops)
    N, n = loops[0].N, loops[0].n
    stacked = np.concatenate([g.values for g in loops])
    out = []
    for s, (phi, D) in zip(s_values, flow.evaluate_many(list(s_values), stacked)):
        lifted = [LoopGrid(phi[i * N:(i + 1) * N]) for i in range(len(loops))]
        jacs = [D[i * N:(i + 1) * N] for i in range(len(loops))]
        out.append(_pullback_errors(family, s, loops, lifted, jacs, pairs))
    return out


def check_pullback_loop_many(family: FormFamily, flow: IsotopyFlow, s_values: Sequence[float],
                             loops: Sequence[LoopGrid], pairs: Sequence[FieldPair],
                             tol: float = FLOW_TOL, metadata: dict | None = None) -> list[VerificationReport]:
    errs = pullback_errors_many(family, flow, s_values, loops, pairs)
    return [
        VerificationReport.build(
            f"pullback@s={s:g}", e.size, float(e.max()), tol,
            {**(metadata or {}), **flow.settings(), "s": s, "steps": flow.steps_for(s),
             "N": loops[0].N, "loops": len(loops), "pairs": len(pairs)},
        )
        for s, e in zip(s_values, errs)
    ]


def check_pullback_loop(family: FormFamily, flow: IsotopyFlow, s: float, loops: Sequence[LoopGrid],
                        pairs: Sequence[FieldPair], tol: float = FLOW_TOL,
                        metadata: dict | None = None) -> VerificationReport:
    """max |Omega^s_{phi^L gamma}(dphi^L X, dphi^L Y) - Omega^0_gamma(X, Y)| over loops x pairs."""
    (report,) = check_pullback_loop_many(family, flow, [s], loops, pairs, tol, metadata)
    return report


@dataclass(frozen=True)
class HalvingStudy:
    steps: tuple[int, ...]
    errors: tuple[float, ...]
    floor: float = FLOW_FLOOR
    min_ratio: float = HALVING_RATIO

    @property
    def ratios(self) -> tuple[float, ...]:
        e = self.errors
        return tuple(e[i] / e[i + 1] if e[i + 1] > 0 else float("inf") for i in range(len(e) - 1))

    @property
    def active_ratios(self) -> tuple[float, ...]:
        """Ratios of doublings whose finer error is still above the floor."""
        return tuple(r for r, e in zip(self.ratios, self.errors[1:]) if e > self.floor)

    @property
    def ok(self) -> bool:
        return all(r >= self.min_ratio for r in self.active_ratios)

    def as_metadata(self) -> dict:
        return {"ok": self.ok, "steps": list(self.steps), "errors": list(self.errors),
                "ratios": list(self.ratios), "floor": self.floor, "min_ratio": self.min_ratio}


def step_halving_study(family: FormFamily, flow: IsotopyFlow, s: float, loops, pairs,
                       steps_list: Sequence[int], floor: float = FLOW_FLOOR) -> HalvingStudy:
    """Pullback error at successively doubled step counts (4th order: ratio ~16)."""
    errors = []
    for steps in steps_list:
        (e,) = pullback_errors_many(family, flow.with_steps(steps), [s], loops, pairs)
        errors.append(float(e.max()))
    return HalvingStudy(tuple(int(k) for k in steps_list), tuple(errors), floor)


def check_lift_derivative_fd(flow: IsotopyFlow, s: float, loops: Sequence[LoopGrid],
                             fields: Sequence[TangentField], h: float = FD_STEP,
                             tol: float = FD_TOL) -> VerificationReport:
    """Variational lift d(phi^L_s)(gamma)(X) against (phi^L_s(gamma + hX) - phi^L_s(gamma - hX)) / 2h."""
    _require_inside(float(flow.family.domain_radius), loops)
    N = loops[0].N
    # one integration for all loops and both shifted copies
    blocks = []
    for gamma, X in zip(loops, fields):
        blocks += [gamma.values, gamma.translate(X, h).values, gamma.translate(X, -h).values]
    phi, D = flow.evaluate(s, np.concatenate(blocks))
    err = 0.0
    for i, X in enumerate(fields):
        base = 3 * i * N
        lifted = apply_jacobians(D[base:base + N], X).values
        fd = (phi[base + N:base + 2 * N] - phi[base + 2 * N:base + 3 * N]) / (2 * h)
        err = max(err, float(np.abs(lifted - fd).max()))
    return VerificationReport.build(
        f"derivative[{flow.family.name}]@s={s:g}", len(fields), err, tol,
        {**flow.settings(), "s": s, "steps": flow.steps_for(s), "h": h, "N": N},
    )


# ---------------------------------------------------------------------------
# closedness, nondegeneracy, compatibility

def check_closed_loop(form: FormField, gamma: LoopGrid, X: TangentField, Y: TangentField,
                      Z: TangentField, h: float = FD_STEP) -> float:
    """d(Omega)_gamma(X, Y, Z) by central differences along constant translations."""

    def D(d, a, b):
        return (omega_loop(form, gamma.translate(d, h), a, b)
                - omega_loop(form, gamma.translate(d, -h), a, b)) / (2 * h)

    return D(X, Y, Z) - D(Y, X, Z) + D(Z, X, Y)


def gram_matrix(form: FormField, gamma: LoopGrid, basis: FourierBasis) -> np.ndarray:
    return omega_gram(form, gamma, basis.as_array())


def check_weak_nondegeneracy(form: FormField, gamma: LoopGrid, basis: FourierBasis) -> float:
    """Smallest singular value of the Gram matrix Omega(b_i, b_j); > 0 means injective on the span."""
    if basis.elements[0].N != gamma.N:
        raise ValueError("basis and loop use different grids")
    return float(np.linalg.svd(gram_matrix(form, gamma, basis), compute_uv=False)[-1])


def check_J_compatibility(form: FormField, J: AlmostComplexStructure, gamma: LoopGrid,
                          fields: Sequence[TangentField], tol: float = QUAD_TOL) -> VerificationReport:
    """Invariance |Omega(JX, JY) - Omega(X, Y)| over pairs and taming min Omega(X, JX).

    The second quantity must be positive; it is carried as the report's
    auxiliary condition.
    """
    if any(not np.any(X.values) for X in fields):
        raise ValueError("zero field in the probe batch; taming needs X != 0")
    JX = [lift_J(J, gamma, X) for X in fields]
    inv = 0.0
    for a in range(len(fields)):
        for b in range(a + 1, len(fields)):
            inv = max(inv, abs(omega_loop(form, gamma, JX[a], JX[b]) - omega_loop(form, gamma, fields[a], fields[b])))
    tame = min(omega_loop(form, gamma, X, JXi) for X, JXi in zip(fields, JX))
    return VerificationReport.build(
        f"j-compat[{form.name}]", len(fields), inv, tol,
        {"auxiliary": {"ok": bool(tame > 0), "min_taming": tame}, "N": gamma.N},
    )


def check_sigma_gradient(form: FormField, functions: Sequence[LiftedFunction], loops: Sequence[LoopGrid],
                         fields: Sequence[TangentField], tol: float = QUAD_TOL) -> VerificationReport:
    """max |df~(Y) - Omega(X^_f, Y)| over functions, loops and fields."""
    err = 0.0
    for lf in functions:
        for gamma, Y in zip(loops, fields):
            Xf = sigma_gradient_lift(form, lf, gamma)
            err = max(err, abs(lift_function_derivative(lf, gamma, Y) - omega_loop(form, gamma, Xf, Y)))
    return VerificationReport.build(
        f"sigma-gradient[{form.name}]", len(functions) * len(loops), err, tol,
        {"functions": [f.name for f in functions], "N": loops[0].N},
    )


def check_function_derivative_fd(functions: Sequence[LiftedFunction], loops: Sequence[LoopGrid],
                                 fields: Sequence[TangentField], h: float = 1e-5,
                                 tol: float = 1e-8) -> VerificationReport:
    """max |df~(Y) - (f~(gamma + hY) - f~(gamma - hY)) / 2h|."""
    err = 0.0
    for lf in functions:
        for gamma, Y in zip(loops, fields):
            fd = (lift_function(lf, gamma.translate(Y, h)) - lift_function(lf, gamma.translate(Y, -h))) / (2 * h)
            err = max(err, abs(lift_function_derivative(lf, gamma, Y) - fd))
    return VerificationReport.build("sigma-gradient/fd", len(functions) * len(loops), err, tol,
                                    {"h": h, "functions": [f.name for f in functions]})


def check_partition(bumps: Sequence[LiftedFunction], loops: Sequence[LoopGrid],
                    tol: float = 1e-12) -> VerificationReport:
    err = 0.0
    for gamma in loops:
        err = max(err, abs(sum(lifted_partition(bumps, gamma, tol=tol)) - 1.0))
    return VerificationReport.build("partition", len(loops), err, tol,
                                    {"members": [b.name for b in bumps], "N": loops[0].N})


# ---------------------------------------------------------------------------
# convergence studies

@dataclass(frozen=True)
class ConvergenceTable:
    check_id: str
    variable: str
    rows: tuple[tuple[float, float], ...]

    @property
    def values(self) -> list[float]:
        return [r[0] for r in self.rows]

    @property
    def errors(self) -> list[float]:
        return [r[1] for r in self.rows]


def _study_omega_quadratic(N: int, **_) -> float:
    gamma = sample_curve({"kind": "circle"}, N)
    X = TangentField.constant([1.0, 0.0], N)
    Y = TangentField.constant([0.0, 1.0], N)
    return abs(omega_loop(quadratic2d(), gamma, X, Y) - 1.5)


def _study_omega_bump(N: int, **_) -> float:
    # off-centre circle crossing the bump's support: not band-limited
    form = scaled2d()
    X = TangentField.constant([1.0, 0.0], N)
    Y = TangentField.constant([0.0, 1.0], N)
    ref_N = 4096
    ref = omega_loop(form, sample_curve({"kind": "circle", "center": [0.6, 0.0], "radius": 1.0}, ref_N),
                     TangentField.constant([1.0, 0.0], ref_N), TangentField.constant([0.0, 1.0], ref_N))
    return abs(omega_loop(form, sample_curve({"kind": "circle", "center": [0.6, 0.0], "radius": 1.0}, N), X, Y) - ref)


def _study_antisymmetry(N: int, seed: int = 0, **_) -> float:
    form = scaled2d()
    loops = probe_loops(seed, 5, 2, N, min(4, (N - 1) // 2), probe_radius(form.domain_radius))
    pairs = probe_pairs(seed, 5, 2, N, min(4, (N - 1) // 2))
    return max(abs(omega_loop(form, g, X, Y) + omega_loop(form, g, Y, X)) for g in loops for X, Y in pairs)


def _study_pullback_N(N: int, seed: int = 0, steps: int = 64, family: str = "scaled2d",
                      loops: int = 4, pairs: int = 3, **_) -> float:
    fam = builtin_family(family)
    M = min(4, (N - 1) // 2)
    L = probe_loops(seed, loops, fam.n, N, M, probe_radius(fam.domain_radius))
    P = probe_pairs(seed, pairs, fam.n, N, M)
    (e,) = pullback_errors_many(fam, IsotopyFlow(fam, steps), [1.0], L, P)
    return float(e.max())


def _study_pullback_steps(steps: int, seed: int = 0, N: int = 64, family: str = "scaled2d",
                          loops: int = 4, pairs: int = 3, **_) -> float:
    return _study_pullback_N(N, seed=seed, steps=int(steps), family=family, loops=loops, pairs=pairs)


def _study_flow_steps(steps: int, **_) -> float:
    """Scaling family against its closed form phi_1(x) = x / sqrt 2, Dphi_1 = I / sqrt 2."""
    from .moser import scaling_family, integrate_flow

    x0 = np.array([[1.0, 0.0], [0.3, -0.4], [-0.7, 0.2]])
    phi, D = integrate_flow(scaling_family(), x0, 1.0, int(steps))
    return float(max(np.abs(phi - x0 / np.sqrt(2)).max(), np.abs(D - np.eye(2) / np.sqrt(2)).max()))


def _study_closed_h(h: float, seed: int = 0, **_) -> float:
    form = builtin_form("split4d")
    N, M = 64, 4
    gamma = probe_loops(seed, 1, 4, N, M, probe_radius(form.domain_radius))[0]
    X, Y, Z = probe_fields(seed, 3, 4, N, M)
    return abs(check_closed_loop(form, gamma, X, Y, Z, h=float(h)))


STUDIES: dict[str, tuple[Callable[..., float], str, str]] = {
    "omega-quadratic": (_study_omega_quadratic, "N", "|Omega - 1.5| for (1+x1^2)dx^dy on the unit circle"),
    "omega-bump": (_study_omega_bump, "N", "Omega for scaled2d on an off-centre circle vs N=4096"),
    "antisymmetry": (_study_antisymmetry, "N", "max |Omega(X,Y) + Omega(Y,X)|"),
    "pullback-N": (_study_pullback_N, "N", "loop pullback defect vs grid size"),
    "pullback-steps": (_study_pullback_steps, "steps", "loop pullback defect vs RK4 steps"),
    "flow-steps": (_study_flow_steps, "steps", "scaling flow vs closed form"),
    "closed-h": (_study_closed_h, "h", "d(Omega) residual for split4d vs FD step"),
}


def convergence_study(check_id: str, values: Sequence[float], **params) -> ConvergenceTable:
    """Rerun a named check at each resolution in ``values`` with fixed seeds."""
    if check_id not in STUDIES:
        raise KeyError(f"unknown study {check_id!r}; known: {sorted(STUDIES)}")
    fn, variable, _ = STUDIES[check_id]
    if variable == "N":
        vals = [int(v) for v in values]
        if any(v & (v - 1) or v < 8 for v in vals) or vals != sorted(vals):
            raise ValueError("N values must be ascending powers of two >= 8")
    rows = tuple((v, float(fn(v, **params))) for v in values)
    return ConvergenceTable(check_id, variable, rows)

"""Reproducible scenario runner.

A scenario is a YAML file naming a form family, grid sizes, seeds, an
s grid, integrator steps and an ordered list of checks.  Running it writes
``summary.txt`` (human-readable) and ``records.jsonl`` (one
VerificationReport per line) into the output directory.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np
import yaml

from .baseform import (FORM_CATALOG, POTENTIAL_CATALOG, FormField, builtin_form, compatible_J,
                       potential_form, probe_radius)
from .errors import DegenerateFormError, DomainError, PartitionError
from .lift import (DEFAULT_FUNCTIONS, FUNCTION_CATALOG, PARTITION_CATALOG, builtin_function,
                   builtin_partition)
from .loopcore import CURVE_CATALOG, MIN_SAMPLES, LoopGrid, TangentField, derive_seed, fourier_basis
from .moser import FAMILY_CATALOG, FormFamily, IsotopyFlow, base_probes, builtin_family, verify_base_darboux
from .reports import VerificationReport
from . import verify

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
SUMMARY_FILE = "summary.txt"
RECORDS_FILE = "records.jsonl"

CHECKS: dict[str, dict] = {
    "pullback": {
        "anchor": "lifted Darboux pullback (phi^L)^* Omega^s = Omega^0",
        "options": {"halving": "list of steps per unit (step-halving certificate)", "floor": "float (1e-10)"},
    },
    "derivative": {
        "anchor": "derivative of the lifted isotopy d phi^L_s(gamma)(X) = (t -> d phi_s(gamma(t)) X(t))",
        "options": {"s": "float (largest s in the grid)", "h": "float (1e-4)"},
    },
    "base-darboux": {
        "anchor": "base identity phi_s^* omega_s = omega_0",
        "options": {},
    },
    "closed": {
        "anchor": "closedness d(Omega^omega) = 0",
        "options": {"h": "float (1e-4)", "probe": "random | coordinate", "forms": "list of form descriptors"},
    },
    "nondegenerate": {
        "anchor": "weak nondegeneracy of Omega^omega on Fourier truncations",
        "options": {"M": "int (scenario M)", "threshold": "float (1e-8)", "forms": "list of form descriptors"},
    },
    "j-compat": {
        "anchor": "lifted almost complex structure compatible with Omega^omega",
        "options": {"forms": "list of form descriptors"},
    },
    "sigma-gradient": {
        "anchor": "sigma-gradient identity df(Y) = sigma(grad^sigma f, Y) for lifted functions",
        "options": {"functions": "list of lifted function names", "fd_h": "float (1e-5)",
                    "fd_tol": "float (1e-8)", "forms": "list of form descriptors"},
    },
    "partition": {
        "anchor": "lifted partition of unity f^_a(gamma) = int f_a(gamma(t)) dt",
        "options": {"name": "partition name (annulus)", "params": "mapping", "radius": "float (1.2)"},
    },
}

DEFAULT_TOLERANCES = {
    "pullback": 1e-6, "derivative": 1e-6, "base-darboux": 1e-6, "closed": 1e-6,
    "nondegenerate": 0.0, "j-compat": 1e-10, "sigma-gradient": 1e-10, "partition": 1e-12,
}

DEFAULT_PROBES = {"loops": 20, "pairs": 10, "triples": 50, "fields": 50, "points": 100}

_FIELDS = ("scenario", "family", "n", "N", "M", "seed", "s_grid", "steps", "checks",
           "tolerances", "probes", "forms", "options", "output")


class ConfigError(ValueError):
    """Invalid scenario configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    family: dict
    n: int
    N: int
    M: int
    seed: int
    s_grid: tuple[float, ...]
    steps: int
    checks: tuple[str, ...]
    tolerances: dict = field(default_factory=dict)
    probes: dict = field(default_factory=dict)
    forms: tuple[dict, ...] = ()
    options: dict = field(default_factory=dict)
    output: str = ""

    def __post_init__(self):
        _validate(self)

    @classmethod
    def from_mapping(cls, data: Any) -> "ScenarioConfig":
        if not isinstance(data, Mapping):
            raise ConfigError("<root>", "configuration must be a mapping")
        unknown = sorted(set(data) - set(_FIELDS))
        if unknown:
            raise ConfigError(unknown[0], "unknown field")
        for key in ("scenario", "family", "n", "N", "M", "seed", "s_grid", "steps", "checks"):
            if key not in data:
                raise ConfigError(key, "required field missing")
        family = data["family"]
        if isinstance(family, str):
            family = {"name": family}
        if not isinstance(family, Mapping):
            raise ConfigError("family", "must be a name or a mapping with 'name' and 'params'")
        return cls(
            scenario=_typed("scenario", data["scenario"], str),
            family={"name": family.get("name"), "params": dict(family.get("params") or {})},
            n=_typed("n", data["n"], int),
            N=_typed("N", data["N"], int),
            M=_typed("M", data["M"], int),
            seed=_typed("seed", data["seed"], int),
            s_grid=tuple(_real(f"s_grid[{i}]", s) for i, s in enumerate(_seq("s_grid", data["s_grid"]))),
            steps=_typed("steps", data["steps"], int),
            checks=tuple(_typed(f"checks[{i}]", c, str) for i, c in enumerate(_seq("checks", data["checks"]))),
            tolerances={str(k): _real(f"tolerances.{k}", v) for k, v in _map("tolerances", data.get("tolerances")).items()},
            probes={str(k): _typed(f"probes.{k}", v, int) for k, v in _map("probes", data.get("probes")).items()},
            forms=tuple(_form_desc(f"forms[{i}]", f) for i, f in enumerate(_seq("forms", data.get("forms") or []))),
            options={str(k): _map(f"options.{k}", v) for k, v in _map("options", data.get("options")).items()},
            output=_typed("output", data.get("output", ""), str),
        )

    def to_mapping(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = [dict(x) if isinstance(x, dict) else x for x in v] if isinstance(v, tuple) else v
        return _plain(out)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_mapping(), sort_keys=False, default_flow_style=None)

    @classmethod
    def from_yaml(cls, text: str) -> "ScenarioConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError("<root>", f"not valid YAML ({exc})") from exc
        return cls.from_mapping(data)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        return cls.from_yaml(Path(path).read_text())

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def tolerance(self, check: str) -> float:
        return float(self.tolerances.get(check, DEFAULT_TOLERANCES[check]))

    def probe(self, key: str) -> int:
        return int(self.probes.get(key, DEFAULT_PROBES[key]))

    def option(self, check: str, key: str, default=None):
        return self.options.get(check, {}).get(key, default)


def _plain(value):
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _typed(path: str, value, kind):
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if kind is str and not isinstance(value, str):
        raise ConfigError(path, f"expected a string, got {value!r}")
    return value


def _real(path: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    return float(value)


def _seq(path: str, value) -> list:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(path, "expected a list")
    return list(value)


def _map(path: str, value) -> dict:
    if value is None:
        return {}
    if not isinstance(value, Mapping):
        raise ConfigError(path, "expected a mapping")
    return dict(value)


def _form_desc(path: str, desc) -> dict:
    if isinstance(desc, str):
        desc = {"name": desc}
    desc = _map(path, desc)
    if ("name" in desc) == ("potential" in desc):
        raise ConfigError(path, "give exactly one of 'name' (builtin form) or 'potential'")
    return {k: (dict(v) if isinstance(v, Mapping) else v) for k, v in desc.items()}


def _validate(cfg: ScenarioConfig) -> None:
    if not cfg.scenario:
        raise ConfigError("scenario", "must be nonempty")
    name = cfg.family.get("name")
    if name not in FAMILY_CATALOG:
        raise ConfigError("family.name", f"unknown family {name!r}; known: {sorted(FAMILY_CATALOG)}")
    try:
        family = builtin_family(name, **cfg.family.get("params", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError("family.params", str(exc)) from exc
    if cfg.n != family.n:
        raise ConfigError("n", f"family {name!r} lives on R^{family.n}, got n={cfg.n}")
    if cfg.N < MIN_SAMPLES or cfg.N & (cfg.N - 1):
        raise ConfigError("N", f"must be a power of two >= {MIN_SAMPLES}, got {cfg.N}")
    if cfg.M < 0 or cfg.N <= 2 * cfg.M:
        raise ConfigError("M", f"need 0 <= M and N > 2M, got M={cfg.M} with N={cfg.N}")
    if cfg.seed < 0:
        raise ConfigError("seed", "must be nonnegative")
    if not cfg.s_grid:
        raise ConfigError("s_grid", "must be nonempty")
    for i, s in enumerate(cfg.s_grid):
        if not 0.0 <= s <= family.s_max:
            raise ConfigError(f"s_grid[{i}]", f"must lie in [0, {family.s_max:g}], got {s!r}")
    if cfg.steps < 16:
        raise ConfigError("steps", f"must be >= 16, got {cfg.steps}")
    if not cfg.checks:
        raise ConfigError("checks", "must be nonempty")
    for i, c in enumerate(cfg.checks):
        if c not in CHECKS:
            raise ConfigError(f"checks[{i}]", f"unknown check {c!r}; known: {list(CHECKS)}")
    for k, v in cfg.tolerances.items():
        if k not in CHECKS:
            raise ConfigError(f"tolerances.{k}", "not a known check")
        if v < 0:
            raise ConfigError(f"tolerances.{k}", "must be >= 0")
    for k, v in cfg.probes.items():
        if k not in DEFAULT_PROBES:
            raise ConfigError(f"probes.{k}", f"unknown probe count; known: {sorted(DEFAULT_PROBES)}")
        if v < 1:
            raise ConfigError(f"probes.{k}", "must be >= 1")
    for i, desc in enumerate(cfg.forms):
        _build_form(f"forms[{i}]", desc)
    for check, opts in cfg.options.items():
        if check not in CHECKS:
            raise ConfigError(f"options.{check}", "not a known check")
        for key in opts:
            if key not in CHECKS[check]["options"]:
                raise ConfigError(f"options.{check}.{key}", "unknown option")
        for i, desc in enumerate(opts.get("forms", [])):
            _build_form(f"options.{check}.forms[{i}]", _form_desc(f"options.{check}.forms[{i}]", desc))
    for i, fn in enumerate(cfg.options.get("sigma-gradient", {}).get("functions", [])):
        if fn not in FUNCTION_CATALOG:
            raise ConfigError(f"options.sigma-gradient.functions[{i}]", f"unknown lifted function {fn!r}")
    part = cfg.options.get("partition", {}).get("name", "annulus")
    if part not in PARTITION_CATALOG:
        raise ConfigError("options.partition.name", f"unknown partition {part!r}")
    halving = cfg.options.get("pullback", {}).get("halving")
    if halving is not None:
        h = _seq("options.pullback.halving", halving)
        if len(h) < 2 or any(not isinstance(k, int) or k < 16 for k in h) or any(b != 2 * a for a, b in zip(h, h[1:])):
            raise ConfigError("options.pullback.halving", "need >= 2 successively doubled step counts >= 16")


def _build_form(path: str, desc: Mapping) -> FormField:
    try:
        if "name" in desc:
            if desc["name"] not in FORM_CATALOG:
                raise ConfigError(f"{path}.name", f"unknown form {desc['name']!r}; known: {sorted(FORM_CATALOG)}")
            return builtin_form(desc["name"], **dict(desc.get("params") or {}))
        if desc["potential"] not in POTENTIAL_CATALOG:
            raise ConfigError(f"{path}.potential", f"unknown potential {desc['potential']!r}")
        return potential_form(desc["potential"], scale=float(desc.get("scale", 1.0)),
                              domain_radius=float(desc.get("domain_radius", math.inf)),
                              **dict(desc.get("params") or {}))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}.params", str(exc)) from exc


# ---------------------------------------------------------------------------
# running


@dataclass
class RunResult:
    config: ScenarioConfig
    reports: list[VerificationReport]
    warnings: list[str]
    output: Path
    strict: bool = False

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports) and not (self.strict and self.warnings)

    @property
    def exit_status(self) -> int:
        return EXIT_PASS if self.passed else EXIT_FAIL


class _Context:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.family: FormFamily = builtin_family(cfg.family["name"], **cfg.family.get("params", {}))
        self.flow = IsotopyFlow(self.family, cfg.steps)
        self.warnings: list[str] = []

    def seed(self, index: int, *keys: int) -> int:
        return derive_seed(self.cfg.seed, index, *keys)

    def forms(self, check: str) -> list[tuple[str, FormField]]:
        descs = self.cfg.option(check, "forms")
        if descs is None and self.cfg.forms:
            descs = self.cfg.forms
        if descs is None:
            # family forms are already named name@s=...
            return [("", self.family.form_at(s)) for s in self.cfg.s_grid]
        return [("", _build_form("forms", _form_desc("forms", s))) for s in descs]

    def loops(self, seed: int, n: int, radius: float, count: int | None = None) -> list[LoopGrid]:
        return verify.probe_loops(seed, count or self.cfg.probe("loops"), n, self.cfg.N, self.cfg.M, radius)

    def fields(self, seed: int, n: int, count: int) -> list:
        return verify.probe_fields(seed, count, n, self.cfg.N, self.cfg.M)


def _run_pullback(ctx: _Context, index: int) -> list[VerificationReport]:
    cfg, fam = ctx.cfg, ctx.family
    loops = ctx.loops(ctx.seed(index, 0), fam.n, probe_radius(fam.domain_radius))
    pairs = verify.probe_pairs(ctx.seed(index, 1), cfg.probe("pairs"), fam.n, cfg.N, cfg.M)
    meta = {"seed": cfg.seed, "M": cfg.M}
    reports = verify.check_pullback_loop_many(fam, ctx.flow, list(cfg.s_grid), loops, pairs,
                                              cfg.tolerance("pullback"), meta)
    halving = cfg.option("pullback", "halving")
    if halving:
        s = max(cfg.s_grid)
        study = verify.step_halving_study(fam, ctx.flow, s, loops, pairs, halving,
                                          float(cfg.option("pullback", "floor", verify.FLOW_FLOOR)))
        if not study.active_ratios:
            ctx.warnings.append(f"pullback-halving@s={s:g}: every doubling is below the floor; certificate is vacuous")
        reports.append(VerificationReport.build(
            f"pullback-halving@s={s:g}", len(loops) * len(pairs), study.errors[-1], cfg.tolerance("pullback"),
            {**meta, "s": s, "N": cfg.N, "auxiliary": study.as_metadata()},
        ))
    return reports


def _run_derivative(ctx: _Context, index: int) -> list[VerificationReport]:
    cfg, fam = ctx.cfg, ctx.family
    s = float(cfg.option("derivative", "s", max(cfg.s_grid)))
    loops = ctx.loops(ctx.seed(index, 0), fam.n, probe_radius(fam.domain_radius))
    fields = ctx.fields(ctx.seed(index, 1), fam.n, len(loops))
    return [verify.check_lift_derivative_fd(ctx.flow, s, loops, fields,
                                            float(cfg.option("derivative", "h", verify.FD_STEP)),
                                            cfg.tolerance("derivative"))]


def _run_base_darboux(ctx: _Context, index: int) -> list[VerificationReport]:
    fam = ctx.family
    probes = base_probes(ctx.seed(index, 0), fam.n, ctx.cfg.probe("points"), probe_radius(fam.domain_radius))
    return [verify_base_darboux(fam, ctx.flow, probes, s, ctx.cfg.tolerance("base-darboux"))
            for s in ctx.cfg.s_grid]


def _run_closed(ctx: _Context, index: int) -> list[VerificationReport]:
    cfg = ctx.cfg
    h = float(cfg.option("closed", "h", verify.FD_STEP))
    coordinate = cfg.option("closed", "probe", "random") == "coordinate"
    out = []
    for j, (tag, form) in enumerate(ctx.forms("closed")):
        count = cfg.probe("triples")
        loops = ctx.loops(ctx.seed(index, j, 0), form.n, probe_radius(form.domain_radius) - h, count)
        if coordinate:
            if form.n < 3:
                raise ConfigError("options.closed.probe", "coordinate probes need n >= 3")
            e = np.eye(form.n)
            triples = [tuple(TangentField.constant(e[i], cfg.N) for i in range(3))] * count
        else:
            f = ctx.fields(ctx.seed(index, j, 1), form.n, 3 * count)
            triples = list(zip(f[0::3], f[1::3], f[2::3]))
        res = max(abs(verify.check_closed_loop(form, g, *t, h=h)) for g, t in zip(loops, triples))
        out.append(VerificationReport.build(f"closed[{form.name}]{tag}", count, res, cfg.tolerance("closed"),
                                            {"h": h, "N": cfg.N, "M": cfg.M, "seed": cfg.seed,
                                             "probe": "coordinate" if coordinate else "random"}))
    return out


def _run_nondegenerate(ctx: _Context, index: int) -> list[VerificationReport]:
    cfg = ctx.cfg
    M = int(cfg.option("nondegenerate", "M", cfg.M))
    threshold = float(cfg.option("nondegenerate", "threshold", 1e-8))
    out = []
    for j, (tag, form) in enumerate(ctx.forms("nondegenerate")):
        basis = fourier_basis(form.n, M, cfg.N)
        loops = ctx.loops(ctx.seed(index, j), form.n, probe_radius(form.domain_radius))
        sigma = min(verify.check_weak_nondegeneracy(form, g, basis) for g in loops)
        if threshold < sigma < 1e-6:
            ctx.warnings.append(f"nondegenerate[{form.name}]{tag}: min singular value {sigma:.3e} is near zero")
        # error is the deficit below the threshold, so passing means sigma >= threshold
        out.append(VerificationReport.build(
            f"nondegenerate[{form.name}]{tag}", len(loops), max(0.0, threshold - sigma), cfg.tolerance("nondegenerate"),
            {"min_singular_value": sigma, "threshold": threshold, "M": M, "N": cfg.N, "seed": cfg.seed,
             "basis_size": len(basis.elements)},
        ))
    return out


def _run_j_compat(ctx: _Context, index: int) -> list[VerificationReport]:
    cfg = ctx.cfg
    out = []
    for j, (tag, form) in enumerate(ctx.forms("j-compat")):
        J = compatible_J(form)
        loops = ctx.loops(ctx.seed(index, j, 0), form.n, probe_radius(form.domain_radius))
        fields = ctx.fields(ctx.seed(index, j, 1), form.n, cfg.probe("pairs"))
        reports = [verify.check_J_compatibility(form, J, g, fields, cfg.tolerance("j-compat")) for g in loops]
        err = max(r.max_abs_error for r in reports)
        tame = min(r.metadata["auxiliary"]["min_taming"] for r in reports)
        out.append(VerificationReport.build(
            f"j-compat[{form.name}]{tag}", len(loops) * len(fields), err, cfg.tolerance("j-compat"),
            {"auxiliary": {"ok": tame > 0, "min_taming": tame}, "N": cfg.N, "M": cfg.M, "seed": cfg.seed},
        ))
    return out


def _run_sigma_gradient(ctx: _Context, index: int) -> list[VerificationReport]:
    cfg = ctx.cfg
    names = cfg.option("sigma-gradient", "functions", list(DEFAULT_FUNCTIONS))
    out = []
    for j, (tag, form) in enumerate(ctx.forms("sigma-gradient")):
        fns = [builtin_function(k) for k in names]
        fns = [f for f in fns if f.min_dim <= form.n]
        count = cfg.probe("fields")
        loops = ctx.loops(ctx.seed(index, j, 0), form.n, probe_radius(form.domain_radius), count)
        fields = ctx.fields(ctx.seed(index, j, 1), form.n, count)
        r = verify.check_sigma_gradient(form, fns, loops, fields, cfg.tolerance("sigma-gradient"))
        out.append(dataclasses.replace(r, check_id=r.check_id + tag,
                                       metadata={**r.metadata, "seed": cfg.seed, "M": cfg.M}))
        fd = verify.check_function_derivative_fd(fns, loops, fields,
                                                 float(cfg.option("sigma-gradient", "fd_h", 1e-5)),
                                                 float(cfg.option("sigma-gradient", "fd_tol", 1e-8)))
        out.append(dataclasses.replace(fd, check_id=f"sigma-gradient/fd[{form.name}]{tag}"))
    return out


def _run_partition(ctx: _Context, index: int) -> list[VerificationReport]:
    cfg = ctx.cfg
    name = cfg.option("partition", "name", "annulus")
    params = dict(cfg.option("partition", "params", {}) or {})
    bumps = builtin_partition(name, **params)
    n = cfg.n
    loops = ctx.loops(ctx.seed(index, 0), n, float(cfg.option("partition", "radius", 1.2)))
    report = verify.check_partition(bumps, loops, cfg.tolerance("partition"))
    out = [dataclasses.replace(report, check_id=f"partition[{name}]",
                               metadata={**report.metadata, "seed": cfg.seed, "M": cfg.M})]
    if name == "annulus":
        inner, outer = params.get("inner", 0.5), params.get("outer", 1.5)
        # loops inside |x| < inner avoid the outer member's support; loops beyond outer avoid the inner one
        small = ctx.loops(ctx.seed(index, 1), n, 0.9 * inner)
        offset = np.zeros(n)
        offset[0] = outer + 1.0
        far = [LoopGrid(g.values + offset) for g in ctx.loops(ctx.seed(index, 2), n, 0.9)]
        vanish = [verify.lifted_partition(bumps, g)[1] for g in small]
        vanish += [verify.lifted_partition(bumps, g)[0] for g in far]
        out.append(VerificationReport.build(f"partition/support[{name}]", len(vanish),
                                            max(abs(v) for v in vanish), 0.0,
                                            {"inner": inner, "outer": outer, "N": cfg.N}))
    return out


_RUNNERS: dict[str, Callable[[_Context, int], list[VerificationReport]]] = {
    "pullback": _run_pullback,
    "derivative": _run_derivative,
    "base-darboux": _run_base_darboux,
    "closed": _run_closed,
    "nondegenerate": _run_nondegenerate,
    "j-compat": _run_j_compat,
    "sigma-gradient": _run_sigma_gradient,
    "partition": _run_partition,
}


def execute(cfg: ScenarioConfig) -> tuple[list[VerificationReport], list[str]]:
    """Run the enabled checks in declared order; failures become failed reports."""
    ctx = _Context(cfg)
    reports: list[VerificationReport] = []
    for index, check in enumerate(cfg.checks):
        try:
            reports += _RUNNERS[check](ctx, index)
        except (DomainError, DegenerateFormError, PartitionError, FloatingPointError) as exc:
            reports.append(VerificationReport.build(check, 0, math.inf, cfg.tolerance(check),
                                                    {"error": f"{type(exc).__name__}: {exc}"}))
    return reports, ctx.warnings


def write_reports(result: RunResult) -> None:
    out = result.output
    out.mkdir(parents=True, exist_ok=True)
    with open(out / RECORDS_FILE, "w", newline="\n") as fh:
        for r in result.reports:
            fh.write(r.to_json() + "\n")
    lines = [f"scenario: {result.config.scenario}",
             f"family: {result.config.family['name']}  n={result.config.n} N={result.config.N} "
             f"M={result.config.M} seed={result.config.seed} steps={result.config.steps}",
             ""]
    lines += [r.summary_line() for r in result.reports]
    lines += [f"[WARN] {w}" for w in result.warnings]
    lines += ["", f"RESULT: {'PASS' if result.passed else 'FAIL'} "
                  f"({sum(r.passed for r in result.reports)}/{len(result.reports)} checks passed)"]
    (out / SUMMARY_FILE).write_text("\n".join(lines) + "\n")


def run_scenario(cfg: ScenarioConfig, out: str | Path | None = None, strict: bool = False) -> RunResult:
    """Execute a scenario and write ``summary.txt`` and ``records.jsonl``."""
    reports, warnings = execute(cfg)
    path = Path(out if out is not None else (cfg.output or Path("runs") / cfg.scenario))
    result = RunResult(cfg, reports, warnings, path, strict)
    write_reports(result)
    return result


def read_records(path: str | Path) -> list[VerificationReport]:
    return [VerificationReport.from_json(line) for line in Path(path).read_text().splitlines() if line]


# ---------------------------------------------------------------------------
# builtin scenarios and catalog


def scenario_names() -> list[str]:
    root = resources.files("loopdarboux") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_builtin_scenario(name: str) -> ScenarioConfig:
    path = resources.files("loopdarboux") / "scenarios" / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError("<scenario>", f"no builtin scenario {name!r}; known: {scenario_names()}")
    return ScenarioConfig.from_yaml(path.read_text())


def resolve_config(ref: str) -> ScenarioConfig:
    """A path to a YAML file, or the name of a shipped scenario."""
    p = Path(ref)
    if p.is_file():
        return ScenarioConfig.load(p)
    return load_builtin_scenario(ref)


def list_builtins() -> dict[str, dict[str, dict]]:
    """Catalog of families, forms, curves, lifted functions, partitions, checks and studies."""
    return {
        "families": {k: {"params": p, "anchor": a} for k, (_, p, a) in FAMILY_CATALOG.items()},
        "forms": {k: {"params": e.params, "anchor": e.anchor, "doc": e.doc, "control": e.control}
                  for k, e in FORM_CATALOG.items()},
        "potentials": {k: {"params": e.params, "anchor": e.anchor, "doc": e.doc}
                       for k, e in POTENTIAL_CATALOG.items()},
        "curves": {k: {"params": v["params"], "anchor": "loop gamma: S^1 -> R^n on the periodic grid",
                       "doc": v["doc"]} for k, v in CURVE_CATALOG.items()},
        "functions": {k: {"params": p, "anchor": a} for k, (_, p, a) in FUNCTION_CATALOG.items()},
        "partitions": {k: {"params": p, "anchor": a} for k, (_, p, a) in PARTITION_CATALOG.items()},
        "checks": {k: {"params": v["options"], "anchor": v["anchor"]} for k, v in CHECKS.items()},
        "studies": {k: {"params": {"values": var}, "anchor": doc} for k, (_, var, doc) in verify.STUDIES.items()},
        "scenarios": {k: {"params": {}, "anchor": "shipped scenario"} for k in scenario_names()},
    }


def format_catalog(catalog: Mapping) -> str:
    lines = []
    for section, entries in catalog.items():
        lines.append(f"{section}:")
        for name, entry in entries.items():
            lines.append(f"  {name}  [{entry['anchor']}]")
            for p, desc in entry.get("params", {}).items():
                lines.append(f"      {p}: {desc}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# plot data

STUDY_DEFAULTS: dict[str, tuple] = {
    "omega-quadratic": (8, 16, 32, 64, 128, 256),
    "omega-bump": (8, 16, 32, 64, 128, 256),
    "antisymmetry": (16, 64, 256),
    "pullback-N": (16, 32, 64, 128),
    "pullback-steps": (16, 32, 64, 128, 256),
    "flow-steps": (16, 32, 64, 128, 256),
    "closed-h": (1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4, 3.125e-4, 1e-4, 1e-5),
}


def emit_plot_data(table: verify.ConvergenceTable, path: str | Path, delimiter: str = ",") -> Path:
    """Write ``variable,max_error`` columns; errors in full-precision scientific notation."""
    if not table.rows:
        raise ValueError("empty convergence table")
    lines = [f"{table.variable}{delimiter}max_error"]
    for v, e in table.rows:
        x = str(int(v)) if table.variable in ("N", "steps") else f"{float(v):.17e}"
        lines.append(f"{x}{delimiter}{e:.17e}")
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------------------
# command line


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="loopdarboux", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)
    run = sub.add_parser("run", help="run a scenario file or a shipped scenario by name")
    run.add_argument("config")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--n-samples", type=int, dest="n_samples", help="override the grid size N")
    run.add_argument("--steps", type=int, help="override integrator steps per unit s")
    run.add_argument("--out", help="output directory")
    run.add_argument("--strict", action="store_true", help="treat warnings as failures")
    sub.add_parser("list", help="print builtin families, forms, curves, functions and checks")
    plot = sub.add_parser("plot", help="write convergence-study data")
    plot.add_argument("study", choices=sorted(verify.STUDIES))
    plot.add_argument("path")
    plot.add_argument("--values", help="comma-separated resolutions (default per study)")
    plot.add_argument("--seed", type=int, default=0)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.verb == "list":
        sys.stdout.write(format_catalog(list_builtins()))
        return EXIT_PASS
    if args.verb == "plot":
        cast = float if args.study == "closed-h" else int
        try:
            values = [cast(v) for v in args.values.split(",")] if args.values else STUDY_DEFAULTS[args.study]
            table = verify.convergence_study(args.study, values, seed=args.seed)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        emit_plot_data(table, args.path)
        return EXIT_PASS
    try:
        cfg = resolve_config(args.config)
        overrides = {k: v for k, v in (("seed", args.seed), ("N", args.n_samples), ("steps", args.steps))
                     if v is not None}
        if overrides:
            cfg = cfg.replace(**overrides)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_scenario(cfg, args.out, args.strict)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write((result.output / SUMMARY_FILE).read_text())
    return result.exit_status


if __name__ == "__main__":
    sys.exit(main())

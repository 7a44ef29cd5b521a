"""Sampled loops, tangent fields, periodic quadrature and Fourier probes.

A loop gamma: S^1 -> R^n with S^1 = R/Z is stored as its values on the
uniform grid t_k = k/N.  Tangent vectors at a loop are grid functions of
the same shape, using the global trivialisation T_gamma L(R^n) = L(R^n).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

MIN_SAMPLES = 8
DEFAULT_SAMPLES = 256
DEFAULT_DECAY = 4.0


def _frozen(values, ndim: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{what} must be a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def grid_times(N: int) -> np.ndarray:
    """Grid nodes t_k = k/N on the unit period."""
    return np.arange(N) / N


@dataclass(frozen=True, eq=False)
class LoopGrid:
    """A loop sampled on N uniform nodes; ``values[k]`` is gamma(k/N)."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.values, 2, "loop values")
        N, n = arr.shape
        if n % 2:
            raise ValueError(f"ambient dimension must be even, got n={n}")
        if N < MIN_SAMPLES:
            raise ValueError(f"need at least {MIN_SAMPLES} samples, got N={N}")
        object.__setattr__(self, "values", arr)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def t(self) -> np.ndarray:
        return grid_times(self.N)

    def translate(self, field: "TangentField", h: float) -> "LoopGrid":
        """The loop gamma + h*X (straight-line motion in the vector space L(R^n))."""
        check_compatible(self, field)
        return LoopGrid(self.values + h * field.values)

    def restrict(self, stride: int) -> "LoopGrid":
        return LoopGrid(self.values[::stride])


@dataclass(frozen=True, eq=False)
class TangentField:
    """A tangent vector X at a loop, stored as samples X(k/N)."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, 2, "field values"))

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def __add__(self, other: "TangentField") -> "TangentField":
        return TangentField(self.values + other.values)

    def __sub__(self, other: "TangentField") -> "TangentField":
        return TangentField(self.values - other.values)

    def __mul__(self, c: float) -> "TangentField":
        return TangentField(c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "TangentField":
        return TangentField(-self.values)

    def restrict(self, stride: int) -> "TangentField":
        return TangentField(self.values[::stride])

    @classmethod
    def constant(cls, vector: Sequence[float], N: int) -> "TangentField":
        vec = np.asarray(vector, dtype=float)
        return cls(np.tile(vec, (N, 1)))

    @classmethod
    def zeros(cls, n: int, N: int) -> "TangentField":
        return cls(np.zeros((N, n)))


def check_compatible(gamma: LoopGrid, *fields: TangentField) -> None:
    for X in fields:
        if X.values.shape != gamma.values.shape:
            raise ValueError(
                f"field shape {X.values.shape} does not match loop shape {gamma.values.shape}"
            )


@dataclass(frozen=True, eq=False)
class FourierBasis:
    """Ordered real Fourier probe basis of the truncated tangent space.

    Order: the n constant fields, then for m = 1..M the n fields
    cos(2 pi m t) e_i followed by the n fields sin(2 pi m t) e_i.
    """

    n: int
    M: int
    elements: tuple

    def __post_init__(self):
        if len(self.elements) != self.n * (2 * self.M + 1):
            raise ValueError("element count must equal n*(2M+1)")

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def as_array(self) -> np.ndarray:
        """Stacked samples, shape (n(2M+1), N, n)."""
        return np.stack([b.values for b in self.elements])

    def labels(self) -> list[str]:
        out = [f"const e{i + 1}" for i in range(self.n)]
        for m in range(1, self.M + 1):
            out += [f"cos{m} e{i + 1}" for i in range(self.n)]
            out += [f"sin{m} e{i + 1}" for i in range(self.n)]
        return out


def quad_integral(samples) -> float | np.ndarray:
    """Periodic trapezoid rule for the integral over one period.

    For period-1 data sampled at t_k = k/N this is the plain mean along
    the first axis; trailing axes are integrated componentwise.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0 or arr.shape[0] == 0:
        raise ValueError("cannot integrate an empty sample sequence")
    out = arr.sum(axis=0) / arr.shape[0]
    return float(out) if np.ndim(out) == 0 else out


def fourier_basis(n: int, M: int, N: int) -> FourierBasis:
    if n <= 0 or n % 2:
        raise ValueError(f"ambient dimension must be a positive even integer, got {n}")
    if M < 0:
        raise ValueError(f"highest mode must be >= 0, got {M}")
    if N <= 2 * M:
        raise ValueError(f"Nyquist violation: N={N} must exceed 2M={2 * M}")
    t = grid_times(N)
    eye = np.eye(n)
    elements = [TangentField(np.tile(eye[i], (N, 1))) for i in range(n)]
    for m in range(1, M + 1):
        c = np.cos(2 * np.pi * m * t)[:, None]
        s = np.sin(2 * np.pi * m * t)[:, None]
        elements += [TangentField(c * eye[i]) for i in range(n)]
        elements += [TangentField(s * eye[i]) for i in range(n)]
    return FourierBasis(n=n, M=M, elements=tuple(elements))


def _fourier_values(const, cos_coeffs, sin_coeffs, N: int) -> np.ndarray:
    """Evaluate c + sum_m a_m cos(2 pi m t) + b_m sin(2 pi m t) on the grid."""
    t = grid_times(N)
    vals = np.tile(np.asarray(const, dtype=float), (N, 1))
    for m, a in cos_coeffs.items():
        vals = vals + np.cos(2 * np.pi * m * t)[:, None] * np.asarray(a, dtype=float)
    for m, b in sin_coeffs.items():
        vals = vals + np.sin(2 * np.pi * m * t)[:, None] * np.asarray(b, dtype=float)
    return vals


def random_tangent(seed: int, n: int, N: int, M: int, decay: float = DEFAULT_DECAY) -> TangentField:
    """Smooth random field with mode-m coefficients uniform in [-1, 1] times (1+m)^-decay.

    Draw order is fixed (constant, then cos/sin per mode ascending), so a
    seed determines the field bit-for-bit.
    """
    if N <= 2 * M:
        raise ValueError(f"Nyquist violation: N={N} must exceed 2M={2 * M}")
    if decay <= 0:
        raise ValueError("decay must be positive")
    rng = np.random.default_rng(seed)
    const = rng.uniform(-1.0, 1.0, n)
    cos_c, sin_c = {}, {}
    for m in range(1, M + 1):
        scale = (1.0 + m) ** (-decay)
        cos_c[m] = scale * rng.uniform(-1.0, 1.0, n)
        sin_c[m] = scale * rng.uniform(-1.0, 1.0, n)
    return TangentField(_fourier_values(const, cos_c, sin_c, N))


def random_loop(
    seed: int, n: int, N: int, M: int, radius: float, decay: float = DEFAULT_DECAY
) -> LoopGrid:
    """Random Fourier loop rescaled so that its largest sample has norm ``radius``."""
    vals = random_tangent(seed, n, N, M, decay).values
    peak = np.linalg.norm(vals, axis=1).max()
    if peak == 0.0:
        return LoopGrid(vals)
    return LoopGrid(vals * (radius / peak))


def derive_seed(seed: int, *keys: int) -> int:
    """Independent child seed for probe ``keys`` of a run seeded by ``seed``."""
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


# ---------------------------------------------------------------------------
# closed-form curve descriptors

CURVE_CATALOG = {
    "circle": {
        "params": {"n": "even int (default 2)", "center": "vector", "radius": "float",
                   "plane": "pair of 1-based axes (default [1, 2])"},
        "doc": "center + radius*(cos 2pi t e_i + sin 2pi t e_j)",
    },
    "constant": {
        "params": {"point": "vector"},
        "doc": "the constant loop at a point",
    },
    "lissajous": {
        "params": {"n": "even int (default 2)", "amplitudes": "pair", "frequencies": "pair of ints",
                   "phase": "float", "plane": "pair of 1-based axes"},
        "doc": "(A cos(2pi p t + phase), B sin(2pi q t)) embedded in a coordinate plane",
    },
    "fourier": {
        "params": {"n": "even int", "a0": "vector", "a": "{mode: vector} cosine coefficients",
                   "b": "{mode: vector} sine coefficients"},
        "doc": "a0 + sum_m a_m cos(2pi m t) + b_m sin(2pi m t)",
    },
}


def _plane(desc: Mapping, n: int) -> tuple[int, int]:
    i, j = desc.get("plane", (1, 2))
    if not (1 <= i <= n and 1 <= j <= n and i != j):
        raise ValueError(f"invalid plane {(i, j)} for n={n}")
    return i - 1, j - 1


def sample_curve(desc: Mapping, N: int = DEFAULT_SAMPLES) -> LoopGrid:
    """Sample a builtin closed-form curve at t_k = k/N.

    ``desc`` is a mapping with a ``"kind"`` key naming an entry of
    :data:`CURVE_CATALOG` plus that entry's parameters.
    """
    kind = desc.get("kind")
    if kind not in CURVE_CATALOG:
        raise ValueError(f"unknown curve descriptor {kind!r}; known: {sorted(CURVE_CATALOG)}")
    if N < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got N={N}")
    t = grid_times(N)

    if kind == "constant":
        point = np.asarray(desc["point"], dtype=float)
        return LoopGrid(np.tile(point, (N, 1)))

    if kind == "fourier":
        a = {int(m): v for m, v in dict(desc.get("a", {})).items()}
        b = {int(m): v for m, v in dict(desc.get("b", {})).items()}
        if "n" in desc:
            n = int(desc["n"])
        else:
            sample = desc.get("a0")
            if sample is None:
                sample = next(iter([*a.values(), *b.values()]), None)
            if sample is None:
                raise ValueError("fourier descriptor needs 'n' or at least one coefficient")
            n = len(sample)
        a0 = desc.get("a0", np.zeros(n))
        return LoopGrid(_fourier_values(a0, a, b, N))

    n = int(desc.get("n", 2))
    i, j = _plane(desc, n)
    vals = np.zeros((N, n))
    vals += np.asarray(desc.get("center", np.zeros(n)), dtype=float)
    if kind == "circle":
        r = float(desc.get("radius", 1.0))
        vals[:, i] += r * np.cos(2 * np.pi * t)
        vals[:, j] += r * np.sin(2 * np.pi * t)
    else:  # lissajous
        A, B = desc.get("amplitudes", (1.0, 1.0))
        p, q = desc.get("frequencies", (1, 2))
        phase = float(desc.get("phase", 0.0))
        vals[:, i] += A * np.cos(2 * np.pi * int(p) * t + phase)
        vals[:, j] += B * np.sin(2 * np.pi * int(q) * t)
    return LoopGrid(vals)

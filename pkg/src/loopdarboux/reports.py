"""Structured verification records."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping


def _plain(value: Any) -> Any:
    """Convert numpy scalars/arrays and tuples into JSON-native values."""
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one numerical check.

    ``passed`` is ``max_abs_error <= tolerance``, optionally and-ed with an
    auxiliary condition recorded under ``metadata["auxiliary"]``.
    """

    check_id: str
    probe_count: int
    max_abs_error: float
    tolerance: float
    passed: bool
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "max_abs_error", float(self.max_abs_error))
        object.__setattr__(self, "tolerance", float(self.tolerance))
        object.__setattr__(self, "metadata", _plain(dict(self.metadata)))
        within = self.max_abs_error <= self.tolerance
        aux = self.metadata.get("auxiliary", {}).get("ok", True)
        if self.passed != (within and aux):
            raise ValueError(f"{self.check_id}: passed flag inconsistent with error/tolerance")

    @classmethod
    def build(cls, check_id: str, probe_count: int, max_abs_error: float, tolerance: float,
              metadata: Mapping | None = None) -> "VerificationReport":
        meta = dict(metadata or {})
        err = float(max_abs_error)
        if math.isnan(err):
            err = math.inf
        aux = meta.get("auxiliary", {}).get("ok", True)
        return cls(check_id, int(probe_count), err, float(tolerance),
                   bool(err <= tolerance and aux), meta)

    def to_record(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_record(cls, record: Mapping) -> "VerificationReport":
        return cls(**dict(record))

    @classmethod
    def from_json(cls, line: str) -> "VerificationReport":
        return cls.from_record(json.loads(line))

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.check_id}: max_abs_error={self.max_abs_error:.3e} "
                f"tol={self.tolerance:.1e} probes={self.probe_count}")

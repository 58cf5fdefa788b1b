"""Device noise tables: per-qubit relaxation times and per-gate-kind errors.

A table is read from a JSON file (empty file = all defaults). The global
scale factor f multiplies every gate error and divides every relaxation and
decoherence time; gate durations are left unchanged.

Default values (microseconds for times, dimensionless errors):
    single-qubit error 1e-3, two-qubit error 4e-2,
    T1 = 55, T2 = 68, single-qubit gate 0.08, two-qubit gate 0.7.
Named gate kinds are also accepted: u1 (virtual, error 0), u2, u3, cnot.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import ConfigError

# kind -> (default error, default duration in microseconds)
KNOWN_GATE_KINDS = {
    "single-qubit": (1e-3, 0.08),
    "two-qubit": (4e-2, 0.7),
    "u1": (0.0, 0.0),
    "u2": (1e-3, 0.08),
    "u3": (3e-3, 0.08),
    "cnot": (4e-2, 0.7),
}

DEFAULT_T1 = 55.0
DEFAULT_T2 = 68.0

# Fallback chain when the simulator asks for a kind the file did not define.
_KIND_ALIASES = {
    "single-qubit": ("single-qubit", "u2"),
    "two-qubit": ("two-qubit", "cnot"),
}


@dataclass(frozen=True)
class GateKindSpec:
    error: float
    time: float


@dataclass(frozen=True)
class NoiseTable:
    """Validated noise parameters; immutable, so scaling returns a new table."""

    t1: tuple[float, ...] | float = DEFAULT_T1
    t2: tuple[float, ...] | float = DEFAULT_T2
    gates: tuple[tuple[str, GateKindSpec], ...] = ()
    scale: float = 1.0

    def __post_init__(self):
        for name, value in (("T1", self.t1), ("T2", self.t2)):
            for v in self._as_tuple(value):
                if not v > 0.0:
                    raise ConfigError(f"{name} entries must be positive, got {v}")
        t1s = self._as_tuple(self.t1)
        t2s = self._as_tuple(self.t2)
        if len(t1s) > 1 and len(t2s) > 1 and len(t1s) != len(t2s):
            raise ConfigError("per-qubit T1 and T2 lists differ in length")
        n = max(len(t1s), len(t2s))
        for q in range(n):
            a = t1s[q % len(t1s)]
            b = t2s[q % len(t2s)]
            if not (b <= 2.0 * a or math.isinf(b)):
                raise ConfigError(f"T2 > 2*T1 on qubit {q}: T1={a}, T2={b}")
        for kind, spec in self.gates:
            if kind not in KNOWN_GATE_KINDS:
                raise ConfigError(f"unknown gate kind {kind!r}")
            if spec.error < 0.0 or spec.error > 1.0:
                raise ConfigError(f"gate error for {kind!r} outside [0, 1]")
            if spec.time < 0.0:
                raise ConfigError(f"negative gate time for {kind!r}")

    @staticmethod
    def _as_tuple(value) -> tuple[float, ...]:
        if isinstance(value, (int, float)):
            return (float(value),)
        return tuple(float(v) for v in value)

    def t1_list(self, nqubits: int) -> tuple[float, ...]:
        vals = self._as_tuple(self.t1)
        if len(vals) == 1:
            return vals * nqubits
        if len(vals) < nqubits:
            raise ConfigError(f"table has T1 for {len(vals)} qubits, need {nqubits}")
        return vals[:nqubits]

    def t2_list(self, nqubits: int) -> tuple[float, ...]:
        vals = self._as_tuple(self.t2)
        if len(vals) == 1:
            return vals * nqubits
        if len(vals) < nqubits:
            raise ConfigError(f"table has T2 for {len(vals)} qubits, need {nqubits}")
        return vals[:nqubits]

    def gate(self, kind: str) -> GateKindSpec:
        """Resolve a gate kind, falling back through aliases then defaults."""
        declared = dict(self.gates)
        for name in _KIND_ALIASES.get(kind, (kind,)):
            if name in declared:
                return declared[name]
        if kind not in KNOWN_GATE_KINDS:
            raise ConfigError(f"unknown gate kind {kind!r}")
        error, time = KNOWN_GATE_KINDS[kind]
        return GateKindSpec(error * self.scale, time)

    def scaled(self, factor: float) -> "NoiseTable":
        """Gate errors x f, relaxation and decoherence times / f, durations kept."""
        if factor < 0.0:
            raise ConfigError("scale factor must be >= 0")

        def shrink(value):
            vals = self._as_tuple(value)
            out = tuple(v / factor if factor > 0.0 else math.inf for v in vals)
            return out[0] if len(out) == 1 else out

        gates = tuple(
            (kind, GateKindSpec(spec.error * factor, spec.time))
            for kind, spec in self.gates
        )
        return NoiseTable(
            t1=shrink(self.t1),
            t2=shrink(self.t2),
            gates=gates,
            scale=self.scale * factor,
        )


def _parse_gates(payload: dict) -> tuple[tuple[str, GateKindSpec], ...]:
    gates = []
    for kind, entry in payload.items():
        kind = str(kind).lower()
        if kind not in KNOWN_GATE_KINDS:
            raise ConfigError(f"unknown gate kind {kind!r}")
        if not isinstance(entry, dict):
            raise ConfigError(f"gate entry for {kind!r} must be an object")
        default_error, default_time = KNOWN_GATE_KINDS[kind]
        error = float(entry.get("error", default_error))
        time = float(entry.get("time", default_time))
        gates.append((kind, GateKindSpec(error, time)))
    return tuple(sorted(gates))


def noise_table_from_dict(payload: dict) -> NoiseTable:
    """Build and validate a table from parsed JSON, applying any scale factor."""
    if not isinstance(payload, dict):
        raise ConfigError("noise table must be a JSON object")
    unknown = set(payload) - {"t1", "t2", "gates", "scale"}
    if unknown:
        raise ConfigError(f"unknown noise-table fields {sorted(unknown)}")
    table = NoiseTable(
        t1=payload.get("t1", DEFAULT_T1),
        t2=payload.get("t2", DEFAULT_T2),
        gates=_parse_gates(payload.get("gates", {})),
    )
    factor = float(payload.get("scale", 1.0))
    if factor != 1.0:
        table = table.scaled(factor)
    return table


def ingest_noise_table(path: str) -> NoiseTable:
    """Read a noise-table file; an empty file yields the default table."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read noise table {path!r}: {exc}") from exc
    if not text.strip():
        return NoiseTable()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"noise table {path!r} is not valid JSON: {exc}") from exc
    return noise_table_from_dict(payload)

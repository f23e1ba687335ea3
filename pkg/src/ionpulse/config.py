"""Configuration documents: strict schema, Hz-to-angular conversion, round-trip.

A config is a JSON object with a required ``schema_version`` and optional
sections ``trap``, ``design``, ``scan``, ``circuit``, ``output``.  All
frequencies in documents are ordinary frequencies in Hz and all times are
seconds; the single conversion to angular units (x 2 pi) happens here and
nowhere else.  Unknown keys anywhere are rejected; validation gathers
every problem before failing so a document can be fixed in one pass.

``normalize`` fills defaults and canonicalizes formatting; normalizing an
already-normalized document is byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .chain import ModeStructure, TrapConfig, mode_structure
from .constants import ATOMIC_MASS_UNIT, DEFAULT_DELTA_K, YB171_MASS
from .designer import DesignSpec
from .errors import ConfigError, IonpulseError

SCHEMA_VERSION = 1

_TWO_PI = 2.0 * math.pi

_TOP_KEYS = {"schema_version", "trap", "design", "scan", "circuit", "output"}
_TRAP_KEYS = {"n_ions", "omega_x_hz", "omega_z_hz", "ion_mass_amu", "delta_k_per_m", "label"}
_DESIGN_KEYS = {
    "solver",
    "target_ions",
    "detuning_mu_hz",
    "gate_time_s",
    "n_segments",
    "mode_weights",
    "thermal_nbar",
}
_SCAN_KEYS = {"axis", "mu_min_hz", "mu_max_hz", "n_points", "offsets_hz"}
_CIRCUIT_KEYS = {"n_qubits", "initial", "ops", "report"}
_OP_KEYS = {"kind", "targets", "angle", "theta", "phi"}
_REPORT_KEYS = {"triple", "ghz_middle"}
_OUTPUT_KEYS = {"trajectory_samples"}
_SOLVERS = ("exact", "weighted", "constant")


@dataclass
class NormalizedConfig:
    """Validated document plus the constructed internal objects."""

    document: dict
    trap: TrapConfig | None
    modes: ModeStructure | None
    design: DesignSpec | None
    scan: dict | None
    circuit: dict | None
    output: dict


def _require_keys(section: dict, allowed: set, where: str, errors: list):
    for key in section:
        if key not in allowed:
            errors.append(f"{where}: unknown key {key!r}")


def _positive_number(section, key, where, errors, required=True):
    if key not in section:
        if required:
            errors.append(f"{where}: missing required key {key!r}")
        return None
    val = section[key]
    if not isinstance(val, (int, float)) or isinstance(val, bool):
        errors.append(f"{where}.{key}: expected a number, got {type(val).__name__}")
        return None
    if not math.isfinite(val) or val <= 0:
        errors.append(f"{where}.{key}: must be finite and positive, got {val!r}")
        return None
    return float(val)


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"invalid JSON: {exc}"]) from exc
    if not isinstance(doc, dict):
        raise ConfigError(["config document must be a JSON object"])
    return doc


def _validate_trap(section: dict, errors: list) -> TrapConfig | None:
    _require_keys(section, _TRAP_KEYS, "trap", errors)
    n_ions = section.get("n_ions")
    if not isinstance(n_ions, int) or isinstance(n_ions, bool) or n_ions < 1:
        errors.append(f"trap.n_ions: expected a positive integer, got {n_ions!r}")
        n_ions = None
    fx = _positive_number(section, "omega_x_hz", "trap", errors)
    fz = _positive_number(section, "omega_z_hz", "trap", errors)
    if fx is not None and fz is not None and fz >= fx:
        errors.append(
            "trap: linear-chain regime violated (requires omega_x_hz > omega_z_hz)"
        )
    mass_amu = _positive_number(section, "ion_mass_amu", "trap", errors, required=False)
    delta_k = _positive_number(section, "delta_k_per_m", "trap", errors, required=False)
    label = section.get("label", "")
    if not isinstance(label, str):
        errors.append("trap.label: expected a string")
        label = ""
    if errors or n_ions is None or fx is None or fz is None:
        return None
    try:
        return TrapConfig(
            n_ions=n_ions,
            omega_x=_TWO_PI * fx,
            omega_z=_TWO_PI * fz,
            ion_mass=mass_amu * ATOMIC_MASS_UNIT if mass_amu else YB171_MASS,
            delta_k=delta_k if delta_k else DEFAULT_DELTA_K,
            label=label,
        )
    except ConfigError as exc:
        errors.extend(f"trap: {e}" for e in exc.errors)
        return None


def _validate_design(section, trap, modes, errors) -> DesignSpec | None:
    _require_keys(section, _DESIGN_KEYS, "design", errors)
    solver = section.get("solver", "exact")
    if solver not in _SOLVERS:
        errors.append(f"design.solver: expected one of {_SOLVERS}, got {solver!r}")
    ions = section.get("target_ions")
    if (
        not isinstance(ions, list)
        or len(ions) != 2
        or not all(isinstance(i, int) and not isinstance(i, bool) for i in ions)
    ):
        errors.append(f"design.target_ions: expected a pair of integers, got {ions!r}")
        ions = None
    mu = _positive_number(section, "detuning_mu_hz", "design", errors)
    gate_time = _positive_number(section, "gate_time_s", "design", errors)
    n_seg = section.get("n_segments")
    if not isinstance(n_seg, int) or isinstance(n_seg, bool) or n_seg < 1:
        errors.append(f"design.n_segments: expected a positive integer, got {n_seg!r}")
        n_seg = None
    weights = section.get("mode_weights")
    if weights is not None and (
        not isinstance(weights, list)
        or not all(isinstance(w, (int, float)) and w > 0 for w in weights)
    ):
        errors.append("design.mode_weights: expected a list of positive numbers")
        weights = None
    nbar = section.get("thermal_nbar")
    if nbar is not None and (
        not isinstance(nbar, list)
        or not all(isinstance(x, (int, float)) and x >= 0 for x in nbar)
    ):
        errors.append("design.thermal_nbar: expected a list of non-negative numbers")
        nbar = None
    if errors or modes is None or ions is None or mu is None or gate_time is None or n_seg is None:
        return None
    try:
        return DesignSpec(
            trap=trap,
            modes=modes,
            target_ions=tuple(ions),
            detuning_mu=_TWO_PI * mu,
            gate_time=gate_time,
            n_segments=n_seg,
            mode_weights=tuple(weights) if weights else None,
            thermal_nbar=tuple(nbar) if nbar else None,
        )
    except ConfigError as exc:
        errors.extend(f"design: {e}" for e in exc.errors)
        return None


def _validate_scan(section, errors) -> dict | None:
    _require_keys(section, _SCAN_KEYS, "scan", errors)
    axis = section.get("axis", "detuning")
    if axis not in ("detuning", "offset", "trap"):
        errors.append(f"scan.axis: expected 'detuning', 'offset' or 'trap', got {axis!r}")
        return None
    if axis == "detuning":
        lo = _positive_number(section, "mu_min_hz", "scan", errors)
        hi = _positive_number(section, "mu_max_hz", "scan", errors)
        n = section.get("n_points")
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            errors.append(f"scan.n_points: expected a positive integer, got {n!r}")
            return None
        if lo is None or hi is None:
            return None
        if hi <= lo:
            errors.append("scan: mu_max_hz must exceed mu_min_hz")
            return None
        return {"axis": "detuning", "mu_min_hz": lo, "mu_max_hz": hi, "n_points": n}
    offsets = section.get("offsets_hz")
    if (
        not isinstance(offsets, list)
        or len(offsets) == 0
        or not all(isinstance(x, (int, float)) and math.isfinite(x) for x in offsets)
    ):
        errors.append("scan.offsets_hz: expected a non-empty list of finite numbers")
        return None
    return {"axis": axis, "offsets_hz": [float(x) for x in offsets]}


def _validate_circuit(section, errors) -> dict | None:
    _require_keys(section, _CIRCUIT_KEYS, "circuit", errors)
    n_qubits = section.get("n_qubits")
    if not isinstance(n_qubits, int) or isinstance(n_qubits, bool) or n_qubits < 1:
        errors.append(f"circuit.n_qubits: expected a positive integer, got {n_qubits!r}")
        return None
    initial = section.get("initial", "0" * n_qubits)
    if (
        not isinstance(initial, str)
        or len(initial) != n_qubits
        or any(c not in "01" for c in initial)
    ):
        errors.append(f"circuit.initial: expected a {n_qubits}-character bit string")
        return None
    ops = section.get("ops")
    if not isinstance(ops, list):
        errors.append("circuit.ops: expected a list")
        return None
    clean_ops = []
    for k, op in enumerate(ops):
        where = f"circuit.ops[{k}]"
        if not isinstance(op, dict):
            errors.append(f"{where}: expected an object")
            continue
        _require_keys(op, _OP_KEYS, where, errors)
        kind = op.get("kind")
        targets = op.get("targets")
        if kind not in ("xx", "r", "rz"):
            errors.append(f"{where}.kind: expected 'xx', 'r' or 'rz', got {kind!r}")
            continue
        if (
            not isinstance(targets, list)
            or not targets
            or not all(isinstance(t, int) and 1 <= t <= n_qubits for t in targets)
        ):
            errors.append(f"{where}.targets: expected 1-based qubit indices within 1..{n_qubits}")
            continue
        entry = {"kind": kind, "targets": targets}
        for key in ("angle", "theta", "phi"):
            if key in op:
                if not isinstance(op[key], (int, float)):
                    errors.append(f"{where}.{key}: expected a number")
                else:
                    entry[key] = float(op[key])
        clean_ops.append(entry)
    report = section.get("report")
    if report is not None:
        _require_keys(report, _REPORT_KEYS, "circuit.report", errors)
        triple = report.get("triple")
        if (
            not isinstance(triple, list)
            or len(triple) != 3
            or not all(isinstance(t, int) and 1 <= t <= n_qubits for t in triple)
            or len(set(triple)) != 3
        ):
            errors.append("circuit.report.triple: expected three distinct 1-based qubits")
            report = None
        else:
            middle = report.get("ghz_middle", triple[1] if triple else None)
            if not isinstance(middle, int) or middle not in triple:
                errors.append("circuit.report.ghz_middle: must be one of the triple")
                report = None
            else:
                report = {"triple": triple, "ghz_middle": middle}
    return {"n_qubits": n_qubits, "initial": initial, "ops": clean_ops, "report": report}


def validate_config(doc: dict) -> NormalizedConfig:
    """Validate a document and build the internal objects.

    Raises ConfigError carrying the full list of problems; on success the
    returned object holds angular-frequency internal specs.
    """
    errors: list = []
    if not isinstance(doc, dict):
        raise ConfigError(["config document must be a JSON object"])
    _require_keys(doc, _TOP_KEYS, "document", errors)
    version = doc.get("schema_version")
    if version is None:
        errors.append("document: missing required key 'schema_version'")
    elif version != SCHEMA_VERSION:
        errors.append(f"document: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")

    trap = modes = None
    if "trap" in doc:
        if isinstance(doc["trap"], dict):
            trap = _validate_trap(doc["trap"], errors)
        else:
            errors.append("trap: expected an object")
    if trap is not None:
        try:
            modes = mode_structure(trap, "transverse")
        except IonpulseError as exc:
            errors.append(f"trap: {exc}")

    design = None
    if "design" in doc:
        if not isinstance(doc["design"], dict):
            errors.append("design: expected an object")
        elif trap is None:
            errors.append("design: requires a valid trap section")
        else:
            design = _validate_design(doc["design"], trap, modes, errors)

    scan = None
    if "scan" in doc:
        if isinstance(doc["scan"], dict):
            scan = _validate_scan(doc["scan"], errors)
        else:
            errors.append("scan: expected an object")

    circuit = None
    if "circuit" in doc:
        if isinstance(doc["circuit"], dict):
            circuit = _validate_circuit(doc["circuit"], errors)
        else:
            errors.append("circuit: expected an object")

    output = {"trajectory_samples": 400}
    if "output" in doc:
        if isinstance(doc["output"], dict):
            _require_keys(doc["output"], _OUTPUT_KEYS, "output", errors)
            samples = doc["output"].get("trajectory_samples")
            if samples is not None:
                if not isinstance(samples, int) or samples < 2:
                    errors.append("output.trajectory_samples: expected an integer >= 2")
                else:
                    output["trajectory_samples"] = samples
        else:
            errors.append("output: expected an object")

    if errors:
        raise ConfigError(errors)
    return NormalizedConfig(
        document=normalize(doc),
        trap=trap,
        modes=modes,
        design=design,
        scan=scan,
        circuit=circuit,
        output=output,
    )


def normalize(doc: dict) -> dict:
    """Canonical form of a raw document: defaults filled, keys ordered."""
    out = {"schema_version": doc.get("schema_version", SCHEMA_VERSION)}
    if "trap" in doc:
        trap = dict(doc["trap"])
        trap.setdefault("ion_mass_amu", YB171_MASS / ATOMIC_MASS_UNIT)
        trap.setdefault("delta_k_per_m", DEFAULT_DELTA_K)
        trap.setdefault("label", "")
        out["trap"] = trap
    if "design" in doc:
        design = dict(doc["design"])
        design.setdefault("solver", "exact")
        out["design"] = design
    for key in ("scan", "circuit", "output"):
        if key in doc:
            out[key] = doc[key]
    return out


def serialize(doc: dict) -> str:
    """Deterministic textual form (sorted keys, two-space indent)."""
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=True) + "\n"


def mu_grid(scan: dict) -> np.ndarray:
    """Angular detunings for a detuning scan section."""
    return _TWO_PI * np.linspace(scan["mu_min_hz"], scan["mu_max_hz"], scan["n_points"])

"""JSON experiment configuration: schema, parsing and helpers.

Complex numbers are written as ``[re, im]`` pairs (a bare real number is also
accepted).  Unknown keys are rejected and every error names the offending
key path, e.g. ``system.qubit_params.c``.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources

import jsonschema
import numpy as np

from .dynamics import DEFAULT_DT, DEFAULT_SAMPLE_EVERY, HamiltonianPair, Nonlinearity, QubitParams, TimeGrid
from .errors import ConfigError, NLSignalError
from .hilbert import (
    BipartiteShape,
    StateVector,
    basis_state,
    family_psi_x,
    psi_x_for_concurrence,
    psi_x_partner,
    random_state,
    separable_eps_state,
)
from .protocols import KET_0, KET_1, KET_MINUS, KET_PLUS, phi_eps, projector

_COMPLEX = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}
_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _COMPLEX}}
_QUBIT_PARAMS = {
    "type": "object",
    "additionalProperties": False,
    "properties": {k: {"type": "number"} for k in ("a1", "a2", "b1", "b2")} | {"c": _COMPLEX, "d": _COMPLEX},
}
_PROJECTOR = {
    "oneOf": [
        {"type": "string", "enum": ["0", "1", "+", "-"]},
        {"type": "object", "additionalProperties": False, "required": ["vector"],
         "properties": {"vector": {"type": "array", "minItems": 1, "items": _COMPLEX}}},
        {"type": "object", "additionalProperties": False, "required": ["phi_eps"],
         "properties": {"phi_eps": {"type": "number", "minimum": 0, "maximum": 1}}},
    ]
}
_STATE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["family"],
    "properties": {
        "family": {"enum": ["bell", "psi_x", "sep_eps", "basis", "custom", "random"]},
        "x": {"type": "number"},
        "overlap": {"type": "number"},
        "partner_of": {"type": "number"},
        "concurrence": {"type": "number"},
        "eps": {"type": "number"},
        "j": {"type": "integer", "minimum": 0},
        "k": {"type": "integer", "minimum": 0},
        "amplitudes": {"type": "array", "minItems": 1, "items": _COMPLEX},
        "normalize": {"type": "boolean"},
        "seed": {"type": "integer"},
    },
}
SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["system", "initial_state", "run"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "system": {
            "type": "object",
            "additionalProperties": False,
            "required": ["nonlinearity"],
            "properties": {
                "dims": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2},
                "qubit_params": _QUBIT_PARAMS,
                "h_a": _MATRIX,
                "h_b": _MATRIX,
                "nonlinearity": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "g"],
                    "properties": {"kind": {"enum": ["gross_pitaevskii", "logarithmic"]}, "g": {"type": "number"}},
                },
            },
        },
        "initial_state": _STATE,
        "run": {
            "type": "object",
            "additionalProperties": False,
            "required": ["t_end"],
            "properties": {
                "t_end": {"type": "number", "minimum": 0},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "sample_every": {"type": "integer", "minimum": 1},
            },
        },
        "protocol": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["observable_choice", "measure_or_not", "intervention"]},
                "x": _PROJECTOR,
                "x_prime": _PROJECTOR,
                "h_a_prime": _MATRIX,
                "qubit_params_prime": _QUBIT_PARAMS,
                "observable": _PROJECTOR,
                "threshold": {"type": "number", "minimum": 0},
            },
        },
        "chaos": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "perturbation": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["state", "parameter", "protocol", "synthetic"]},
                        "initial_state": _STATE,
                        "path": {"type": "string"},
                        "offset": {"type": "number"},
                        "rate": {"type": "number"},
                        "d0": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                "t_max": {"oneOf": [{"type": "number", "exclusiveMinimum": 0}, {"const": "auto"}]},
                "epsilon_shift": {"type": "number", "minimum": 0},
                "parameter_offset": {"type": "number"},
            },
        },
    },
}


def _path(parts) -> str:
    return ".".join(str(p) for p in parts) or "<root>"


def _complex(v) -> complex:
    return complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)


def _pair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _matrix(rows, where) -> np.ndarray:
    try:
        return np.array([[_complex(v) for v in row] for row in rows], dtype=complex)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{where}: malformed matrix ({err})") from None


@dataclass(frozen=True)
class Experiment:
    """Parsed configuration: ready-to-use module inputs plus the raw dict."""

    raw: dict
    shape: BipartiteShape
    h: HamiltonianPair
    nl: Nonlinearity
    psi0: StateVector
    grid: TimeGrid
    qubit_params: QubitParams | None

    @property
    def protocol(self):
        return self.raw.get("protocol")

    @property
    def chaos(self):
        return self.raw.get("chaos")


def load(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON ({err})") from None
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err.strerror}") from None


def recipe_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("nlsignal.recipes").iterdir() if p.name.endswith(".json"))


def load_recipe(name: str) -> dict:
    res = resources.files("nlsignal.recipes") / f"{name}.json"
    if not res.is_file():
        raise ConfigError(f"unknown recipe {name!r}; available: {', '.join(recipe_names())}")
    return json.loads(res.read_text())


def validate(raw: dict):
    if not isinstance(raw, dict):
        raise ConfigError("<root>: config must be a JSON object")
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = jsonschema.exceptions.best_match(errors)
        raise ConfigError(f"{_path(e.absolute_path)}: {e.message}")


def _normalize_states(raw):
    """A bare amplitude list is shorthand for a ``custom`` state."""
    if not isinstance(raw, dict):
        return raw
    raw = copy.deepcopy(raw)
    if isinstance(raw.get("initial_state"), list):
        raw["initial_state"] = {"family": "custom", "amplitudes": raw["initial_state"]}
    pert = (raw.get("chaos") or {}).get("perturbation") if isinstance(raw.get("chaos"), dict) else None
    if isinstance(pert, dict) and isinstance(pert.get("initial_state"), list):
        pert["initial_state"] = {"family": "custom", "amplitudes": pert["initial_state"]}
    return raw


def parse(raw: dict, seed: int = 0) -> Experiment:
    """Validate ``raw`` and build module inputs; ``seed`` feeds random states
    that do not carry their own seed."""
    raw = _normalize_states(raw)
    validate(raw)
    system = raw["system"]
    dims = system.get("dims", [2, 2])
    shape = BipartiteShape(*dims)
    qp = None
    try:
        if "qubit_params" in system:
            if "h_a" in system or "h_b" in system:
                raise ConfigError("system: give either qubit_params or h_a/h_b, not both")
            if dims != [2, 2]:
                raise ConfigError("system.qubit_params: only valid for dims [2, 2]")
            qp = qubit_params(system["qubit_params"], system["nonlinearity"]["g"])
            h = qp.hamiltonians()
        elif "h_a" in system and "h_b" in system:
            h = HamiltonianPair(_matrix(system["h_a"], "system.h_a"), _matrix(system["h_b"], "system.h_b"))
            if h.shape != shape:
                raise ConfigError(f"system.h_a/h_b: dims {h.shape.dim_a}x{h.shape.dim_b} disagree with dims {dims}")
        else:
            raise ConfigError("system: need qubit_params or both h_a and h_b")
    except ConfigError:
        raise
    except NLSignalError as err:
        raise ConfigError(f"system: {err}") from None
    nl_cfg = system["nonlinearity"]
    nl = Nonlinearity(nl_cfg["kind"], float(nl_cfg["g"]))
    psi0 = build_state(raw["initial_state"], shape, "initial_state", seed)
    run = raw["run"]
    try:
        grid = TimeGrid(float(run["t_end"]), float(run.get("dt", DEFAULT_DT)),
                        int(run.get("sample_every", DEFAULT_SAMPLE_EVERY)))
    except NLSignalError as err:
        raise ConfigError(f"run: {err}") from None
    exp = Experiment(raw, shape, h, nl, psi0, grid, qp)
    _check_protocol(exp)
    _check_chaos(exp)
    return exp


def qubit_params(d: dict, g: float) -> QubitParams:
    return QubitParams(
        a1=float(d.get("a1", 0)), a2=float(d.get("a2", 0)),
        b1=float(d.get("b1", 0)), b2=float(d.get("b2", 0)),
        c=_complex(d.get("c", 0)), d=_complex(d.get("d", 0)), g=float(g),
    )


def build_state(spec: dict, shape: BipartiteShape, where: str, seed: int = 0) -> StateVector:
    fam = spec["family"]
    qubit_only = fam in ("bell", "psi_x", "sep_eps")
    if qubit_only and (shape.dim_a, shape.dim_b) != (2, 2):
        raise ConfigError(f"{where}.family: {fam!r} needs dims [2, 2]")
    try:
        if fam == "bell":
            return family_psi_x(0.0)
        if fam == "psi_x":
            keys = {k for k in ("x", "overlap", "concurrence") if k in spec}
            if len(keys) != 1:
                raise ConfigError(f"{where}: psi_x needs exactly one of x, overlap, concurrence")
            if "x" in spec:
                return family_psi_x(spec["x"])
            if "concurrence" in spec:
                return family_psi_x(psi_x_for_concurrence(spec["concurrence"]))
            return family_psi_x(psi_x_partner(float(spec.get("partner_of", 0.0)), spec["overlap"]))
        if fam == "sep_eps":
            if "eps" not in spec:
                raise ConfigError(f"{where}.eps: required for sep_eps")
            return separable_eps_state(spec["eps"])
        if fam == "basis":
            return basis_state(spec.get("j", 0), spec.get("k", 0), shape)
        if fam == "random":
            return random_state(np.random.default_rng(spec.get("seed", seed)), shape)
        if "amplitudes" not in spec:
            raise ConfigError(f"{where}.amplitudes: required for a custom state")
        amps = [_complex(v) for v in spec["amplitudes"]]
        return StateVector.from_amplitudes(amps, shape, normalize=spec.get("normalize", False))
    except ConfigError:
        raise
    except NLSignalError as err:
        raise ConfigError(f"{where}: {err}") from None


def build_projector(spec, dim: int, where: str) -> np.ndarray:
    if isinstance(spec, str):
        if dim != 2:
            raise ConfigError(f"{where}: named projectors are qubit projectors")
        return projector({"0": KET_0, "1": KET_1, "+": KET_PLUS, "-": KET_MINUS}[spec])
    if "phi_eps" in spec:
        if dim != 2:
            raise ConfigError(f"{where}: phi_eps is a qubit projector")
        return projector(phi_eps(spec["phi_eps"]))
    vec = np.array([_complex(v) for v in spec["vector"]])
    if vec.size != dim or not np.linalg.norm(vec) > 0:
        raise ConfigError(f"{where}.vector: need a non-zero vector of length {dim}")
    return projector(vec)


def protocol_inputs(exp: Experiment) -> dict:
    """Resolve the protocol block into arrays and Hamiltonians."""
    p = exp.protocol
    kind = p["kind"]
    out = {"kind": kind,
           "observable": build_projector(p.get("observable", "0"), exp.shape.dim_b, "protocol.observable"),
           "threshold": float(p.get("threshold", 0.02))}
    if kind in ("observable_choice", "measure_or_not"):
        if "x" not in p:
            raise ConfigError(f"protocol.x: required for {kind}")
        out["x"] = build_projector(p["x"], exp.shape.dim_a, "protocol.x")
    if kind == "observable_choice":
        if "x_prime" not in p:
            raise ConfigError("protocol.x_prime: required for observable_choice")
        out["x_prime"] = build_projector(p["x_prime"], exp.shape.dim_a, "protocol.x_prime")
    if kind == "intervention":
        if "h_a_prime" in p:
            try:
                out["h_prime"] = exp.h.with_h_a(_matrix(p["h_a_prime"], "protocol.h_a_prime"))
            except NLSignalError as err:
                raise ConfigError(f"protocol.h_a_prime: {err}") from None
        elif "qubit_params_prime" in p:
            if exp.qubit_params is None:
                raise ConfigError("protocol.qubit_params_prime: system must use qubit_params")
            bad = set(p["qubit_params_prime"]) - {"a1", "a2", "c"}
            if bad:
                raise ConfigError(f"protocol.qubit_params_prime: only Alice's a1, a2, c may change, got {sorted(bad)}")
            changes = {k: (_complex(v) if k == "c" else float(v)) for k, v in p["qubit_params_prime"].items()}
            out["h_prime"] = exp.qubit_params.replace(**changes).hamiltonians()
        else:
            raise ConfigError("protocol: intervention needs h_a_prime or qubit_params_prime")
        if out["h_prime"].shape != exp.shape:
            raise ConfigError("protocol.h_a_prime: wrong dimension")
    return out


def _check_protocol(exp):
    if exp.protocol is not None:
        protocol_inputs(exp)


def _check_chaos(exp):
    c = exp.chaos
    if c is None or "perturbation" not in c:
        return
    pert = c["perturbation"]
    kind = pert["kind"]
    if kind == "state":
        if "initial_state" not in pert:
            raise ConfigError("chaos.perturbation.initial_state: required for a state perturbation")
        build_state(pert["initial_state"], exp.shape, "chaos.perturbation.initial_state")
    elif kind == "parameter":
        for key in ("path", "offset"):
            if key not in pert:
                raise ConfigError(f"chaos.perturbation.{key}: required for a parameter perturbation")
        perturbed_config(exp.raw, pert["path"], pert["offset"])
    elif kind == "protocol" and exp.protocol is None:
        raise ConfigError("chaos.perturbation: kind 'protocol' needs a protocol block")
    elif kind == "synthetic" and "rate" not in pert:
        raise ConfigError("chaos.perturbation.rate: required for the synthetic self-test")


# -- path helpers -----------------------------------------------------------

def get_path(raw: dict, path: str):
    node = raw
    parts = path.split(".")
    for i, key in enumerate(parts):
        if isinstance(node, list):
            try:
                node = node[int(key)]
            except (ValueError, IndexError):
                raise ConfigError(f"{'.'.join(parts[:i + 1])}: no such element") from None
        elif isinstance(node, dict) and key in node:
            node = node[key]
        else:
            raise ConfigError(f"{'.'.join(parts[:i + 1])}: no such key")
    return node


def set_path(raw: dict, path: str, value) -> dict:
    """Copy of ``raw`` with the scalar at ``path`` replaced.  Missing leaf keys
    under an existing object are created (e.g. an omitted ``a2``)."""
    out = copy.deepcopy(raw)
    parts = path.split(".")
    parent = get_path(out, ".".join(parts[:-1])) if len(parts) > 1 else out
    leaf = parts[-1]
    if isinstance(parent, list):
        try:
            idx = int(leaf)
            old = parent[idx]
        except (ValueError, IndexError):
            raise ConfigError(f"{path}: no such element") from None
        if isinstance(old, (dict, list)) and not _is_pair(old):
            raise ConfigError(f"{path}: does not address a scalar")
        parent[idx] = value
        return out
    if not isinstance(parent, dict):
        raise ConfigError(f"{path}: parent is not an object")
    old = parent.get(leaf)
    if isinstance(old, dict) or (isinstance(old, list) and not _is_pair(old)):
        raise ConfigError(f"{path}: does not address a scalar")
    parent[leaf] = value
    return out


def _is_pair(v):
    return isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v)


def perturbed_config(raw: dict, path: str, offset: float) -> dict:
    """Add ``offset`` to the real part of the scalar at ``path``."""
    try:
        current = get_path(raw, path)
    except ConfigError:
        current = 0.0
    if _is_pair(current):
        value = [current[0] + offset, current[1]]
    elif isinstance(current, (int, float)) and not isinstance(current, bool):
        value = current + offset
    else:
        raise ConfigError(f"{path}: does not address a number")
    return set_path(raw, path, value)


def dump(exp: Experiment) -> str:
    """Canonical JSON for a parsed experiment (complex values as pairs)."""
    raw = copy.deepcopy(exp.raw)
    system = raw["system"]
    system.setdefault("dims", [exp.shape.dim_a, exp.shape.dim_b])
    if "qubit_params" in system:
        qp = exp.qubit_params
        system["qubit_params"] = {"a1": qp.a1, "a2": qp.a2, "b1": qp.b1, "b2": qp.b2,
                                  "c": _pair(qp.c), "d": _pair(qp.d)}
    else:
        system["h_a"] = [[_pair(v) for v in row] for row in exp.h.h_a]
        system["h_b"] = [[_pair(v) for v in row] for row in exp.h.h_b]
    raw["run"] = {"t_end": exp.grid.t_end, "dt": exp.grid.dt, "sample_every": int(exp.grid.sample_every)}
    return json.dumps(raw, indent=2, sort_keys=True)

"""Scenario configuration: presets, JSON loading, and round-trip output.

A scenario bundles everything one run needs: the Hamiltonian set, the
perturbed initial state, the grid, and the solver settings. Configs are
JSON documents; complex matrices are written as nested arrays of
[real, imag] pairs (bare numbers are accepted as real entries).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import HamiltonianSet
from .linalg import IDENTITY_2, PAULI_X, PAULI_Y, PAULI_Z, kron
from .solver import SolverConfig, TimeSearch
from .states import (BELL_KINDS, DensityMatrix, basis_product_state, bell_state,
                     density_from_pure, perturbed_separable)

REFERENCE_PRESET = "paper-sec4"


class ScenarioError(ValueError):
    """Configuration could not be parsed or validated."""


def _reference_hamiltonians(u_max: float = 1.0) -> HamiltonianSet:
    h0 = kron(PAULI_Z, PAULI_Z)
    h1 = kron(PAULI_X, PAULI_Y) + kron(PAULI_Z, PAULI_Z)
    h2 = kron(PAULI_X, PAULI_Z) + kron(PAULI_Z, PAULI_X)
    h3 = kron(PAULI_Y, PAULI_Z) + kron(PAULI_Z, PAULI_Y)
    return HamiltonianSet(h0, (h1, h2, h3), u_max)


HAMILTONIAN_PRESETS = {REFERENCE_PRESET: _reference_hamiltonians}


def _state_preset(name: str) -> DensityMatrix:
    if name == "ground":
        return density_from_pure(basis_product_state(0, 0))
    if name in BELL_KINDS:
        return density_from_pure(bell_state(name))
    raise ScenarioError(f"unknown state preset {name!r}; "
                        f"choose 'ground' or one of {BELL_KINDS}")


STATE_PRESET_NAMES = ("ground",) + BELL_KINDS

SCENARIO_PRESETS = {
    REFERENCE_PRESET: {
        "hamiltonian_preset": REFERENCE_PRESET,
        "initial_state": {"rho_sep": "ground", "delta_rho": "phi_plus", "epsilon": 0.01},
        "u_max": 1.0,
        "gamma": 0.1,
        "n_steps": 1000,
        "tf_search": {"t_min": 0.2, "t_max": 2.0, "tolerance": 0.02},
        "out_dir": "runs",
    },
}

_DEFAULTS = SCENARIO_PRESETS[REFERENCE_PRESET]


def _parse_complex_matrix(obj, field: str) -> np.ndarray:
    def entry(x):
        if isinstance(x, (int, float)):
            return complex(x)
        if (isinstance(x, (list, tuple)) and len(x) == 2
                and all(isinstance(p, (int, float)) for p in x)):
            return complex(x[0], x[1])
        raise ScenarioError(f"{field}: matrix entries must be numbers or [real, imag] pairs")

    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ScenarioError(f"{field}: expected a nested array (list of rows)")
    rows = [[entry(x) for x in r] for r in obj]
    if len({len(r) for r in rows}) != 1:
        raise ScenarioError(f"{field}: rows have inconsistent lengths")
    return np.array(rows, dtype=complex)


def _matrix_to_pairs(m: np.ndarray) -> list:
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def _require(cond: bool, field: str, msg: str) -> None:
    if not cond:
        raise ScenarioError(f"{field}: {msg}")


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """Fully resolved run configuration.

    State and Hamiltonian fields keep either a preset name or an
    explicit matrix, so serializing preserves what the user wrote;
    exactly one of tf and tf_search must be set.
    """

    hamiltonian_preset: str | None = REFERENCE_PRESET
    h0: np.ndarray | None = None
    control_hamiltonians: tuple[np.ndarray, ...] | None = None
    rho_sep_spec: object = "ground"
    delta_rho_spec: object = "phi_plus"
    epsilon: float = 0.01
    u_max: float = 1.0
    gamma: float = 0.1
    n_steps: int = 1000
    tf: float | None = None
    tf_search: TimeSearch | None = None
    max_sweeps: int = 200
    flip_fraction: float = 0.2
    convergence_tol: float = 1e-10
    denominator_floor: float = 1e-9
    initial_control: tuple[float, ...] | None = None
    out_dir: str = "runs"

    def __post_init__(self):
        _require((self.hamiltonian_preset is None)
                 != (self.h0 is None and self.control_hamiltonians is None),
                 "hamiltonian_preset", "give a preset name or explicit matrices, not both")
        if self.hamiltonian_preset is None:
            _require(self.h0 is not None and self.control_hamiltonians is not None,
                     "hamiltonian_preset", "explicit form needs both h0 and controls")
        _require((self.tf is None) != (self.tf_search is None),
                 "tf", "exactly one of tf and tf_search must be present")
        if self.tf is not None:
            _require(self.tf > 0, "tf", "must be positive")
        _require(0.0 <= self.epsilon <= 1.0, "initial_state.epsilon", "must lie in [0, 1]")
        _require(self.n_steps >= 1, "n_steps", "must be at least 1")
        # resolve eagerly so invalid matrices or states fail at load time
        hs = self.hamiltonian_set()
        self.initial_density()
        if self.initial_control is not None:
            _require(len(self.initial_control) == hs.m, "solver.initial_control",
                     f"needs {hs.m} entries")
        self.solver_config()

    def hamiltonian_set(self) -> HamiltonianSet:
        if self.hamiltonian_preset is not None:
            try:
                build = HAMILTONIAN_PRESETS[self.hamiltonian_preset]
            except KeyError:
                raise ScenarioError(
                    f"hamiltonian_preset: unknown preset {self.hamiltonian_preset!r}") from None
            return build(self.u_max)
        try:
            return HamiltonianSet(self.h0, tuple(self.control_hamiltonians), self.u_max)
        except ValueError as exc:
            raise ScenarioError(f"hamiltonian_preset: {exc}") from None

    def _resolve_state(self, spec, field: str) -> DensityMatrix:
        if isinstance(spec, str):
            return _state_preset(spec)
        m = np.asarray(spec, dtype=complex)
        # qubit pair when it fits, otherwise treat B as trivial
        dim_a, dim_b = (2, 2) if m.shape == (4, 4) else (m.shape[0], 1)
        try:
            return DensityMatrix(m, dim_a, dim_b)
        except ValueError as exc:
            raise ScenarioError(f"{field}: {exc}") from None

    def initial_density(self) -> DensityMatrix:
        rho_sep = self._resolve_state(self.rho_sep_spec, "initial_state.rho_sep")
        delta = self._resolve_state(self.delta_rho_spec, "initial_state.delta_rho")
        try:
            return perturbed_separable(rho_sep, delta, self.epsilon)
        except ValueError as exc:
            raise ScenarioError(f"initial_state: {exc}") from None

    def solver_config(self) -> SolverConfig:
        try:
            return SolverConfig(gamma=self.gamma, max_sweeps=self.max_sweeps,
                                flip_fraction=self.flip_fraction,
                                convergence_tol=self.convergence_tol,
                                denominator_floor=self.denominator_floor,
                                tf_search=self.tf_search)
        except ValueError as exc:
            raise ScenarioError(f"solver: {exc}") from None

    def to_dict(self) -> dict:
        """Canonical JSON-shaped document, suitable for reloading."""
        if self.hamiltonian_preset is not None:
            ham = self.hamiltonian_preset
        else:
            ham = {"h0": _matrix_to_pairs(self.h0),
                   "controls": [_matrix_to_pairs(c) for c in self.control_hamiltonians]}
        state = {
            "rho_sep": (self.rho_sep_spec if isinstance(self.rho_sep_spec, str)
                        else _matrix_to_pairs(np.asarray(self.rho_sep_spec, dtype=complex))),
            "delta_rho": (self.delta_rho_spec if isinstance(self.delta_rho_spec, str)
                          else _matrix_to_pairs(np.asarray(self.delta_rho_spec, dtype=complex))),
            "epsilon": self.epsilon,
        }
        doc = {
            "hamiltonian_preset": ham,
            "initial_state": state,
            "u_max": self.u_max,
            "gamma": self.gamma,
            "n_steps": self.n_steps,
        }
        if self.tf is not None:
            doc["tf"] = self.tf
        else:
            doc["tf_search"] = {"t_min": self.tf_search.t_min,
                                "t_max": self.tf_search.t_max,
                                "tolerance": self.tf_search.tolerance}
        solver = {"max_sweeps": self.max_sweeps,
                  "flip_fraction": self.flip_fraction,
                  "convergence_tol": self.convergence_tol,
                  "denominator_floor": self.denominator_floor}
        if self.initial_control is not None:
            solver["initial_control"] = list(self.initial_control)
        doc["solver"] = solver
        doc["out_dir"] = self.out_dir
        return doc

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScenarioConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def scenario_from_dict(doc: dict) -> ScenarioConfig:
    """Build and validate a config from a JSON-shaped document."""
    if not isinstance(doc, dict):
        raise ScenarioError("config document must be a JSON object")
    doc = dict(doc)
    preset = doc.pop("preset", None)
    if preset is not None:
        try:
            base = dict(SCENARIO_PRESETS[preset])
        except KeyError:
            raise ScenarioError(f"preset: unknown preset {preset!r}; "
                                f"available: {sorted(SCENARIO_PRESETS)}") from None
        # an explicit horizon choice supersedes the preset's choice entirely
        if "tf" in doc:
            base.pop("tf_search", None)
        if "tf_search" in doc:
            base.pop("tf", None)
        doc = {**base, **doc}
    known = {"hamiltonian_preset", "initial_state", "u_max", "gamma", "n_steps",
             "tf", "tf_search", "solver", "out_dir"}
    unknown = set(doc) - known
    _require(not unknown, "config", f"unknown keys {sorted(unknown)}")

    kwargs: dict = {}

    ham = doc.get("hamiltonian_preset", _DEFAULTS["hamiltonian_preset"])
    if isinstance(ham, str):
        kwargs["hamiltonian_preset"] = ham
    elif isinstance(ham, dict):
        _require({"h0", "controls"} <= set(ham), "hamiltonian_preset",
                 "explicit form needs keys h0 and controls")
        kwargs["hamiltonian_preset"] = None
        kwargs["h0"] = _parse_complex_matrix(ham["h0"], "hamiltonian_preset.h0")
        _require(isinstance(ham["controls"], list) and ham["controls"],
                 "hamiltonian_preset.controls", "expected a nonempty list of matrices")
        kwargs["control_hamiltonians"] = tuple(
            _parse_complex_matrix(c, f"hamiltonian_preset.controls[{i}]")
            for i, c in enumerate(ham["controls"]))
    else:
        raise ScenarioError("hamiltonian_preset: expected a preset name or an object")

    state = doc.get("initial_state", _DEFAULTS["initial_state"])
    _require(isinstance(state, dict), "initial_state", "expected an object")
    defaults_state = _DEFAULTS["initial_state"]

    def state_spec(key):
        spec = state.get(key, defaults_state[key])
        if isinstance(spec, str):
            return spec
        return _parse_complex_matrix(spec, f"initial_state.{key}")

    kwargs["rho_sep_spec"] = state_spec("rho_sep")
    kwargs["delta_rho_spec"] = state_spec("delta_rho")
    eps = state.get("epsilon", defaults_state["epsilon"])
    _require(isinstance(eps, (int, float)), "initial_state.epsilon", "must be a number")
    kwargs["epsilon"] = float(eps)

    for key, conv in (("u_max", float), ("gamma", float), ("n_steps", int)):
        val = doc.get(key, _DEFAULTS[key])
        _require(isinstance(val, (int, float)), key, "must be a number")
        kwargs[key] = conv(val)

    has_tf = "tf" in doc
    has_window = "tf_search" in doc
    _require(not (has_tf and has_window), "tf", "give either tf or tf_search, not both")
    if has_tf:
        _require(isinstance(doc["tf"], (int, float)), "tf", "must be a number")
        kwargs["tf"] = float(doc["tf"])
    else:
        window = doc.get("tf_search", _DEFAULTS["tf_search"])
        _require(isinstance(window, dict) and {"t_min", "t_max"} <= set(window),
                 "tf_search", "expected an object with t_min and t_max")
        try:
            kwargs["tf_search"] = TimeSearch(
                float(window["t_min"]), float(window["t_max"]),
                float(window.get("tolerance", 0.02)),
                int(window.get("coarse_points", 6)))
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"tf_search: {exc}") from None

    solver = doc.get("solver", {})
    _require(isinstance(solver, dict), "solver", "expected an object")
    for key, conv in (("max_sweeps", int), ("flip_fraction", float),
                      ("convergence_tol", float), ("denominator_floor", float)):
        if key in solver:
            _require(isinstance(solver[key], (int, float)), f"solver.{key}", "must be a number")
            kwargs[key] = conv(solver[key])
    if "initial_control" in solver:
        ic = solver["initial_control"]
        _require(isinstance(ic, list) and all(isinstance(x, (int, float)) for x in ic),
                 "solver.initial_control", "must be a list of numbers")
        kwargs["initial_control"] = tuple(float(x) for x in ic)

    out_dir = doc.get("out_dir", _DEFAULTS["out_dir"])
    _require(isinstance(out_dir, str), "out_dir", "must be a string")
    kwargs["out_dir"] = out_dir

    return ScenarioConfig(**kwargs)


def load_scenario(path) -> ScenarioConfig:
    """Read and validate a JSON scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return scenario_from_dict(doc)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None

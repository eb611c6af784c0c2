"""JSON schemas for problems, solutions, and function specs.

Complex numbers are interchanged as two-element [re, im] arrays; grids
of values are flattened row-major over (ring, angle).  Serialization is
canonical (sorted keys, two-space indent), so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import json

import numpy as np

from .bep import BepProblem, BepSolution
from .bergman import AnalyticCoeffs
from .fbep import FbepProblem, FbepSolution
from .grid import DiscGrid, GridFunction, Region, build_grid
from .vekua import Conductivity

TOOL_VERSION = "0.1.0"
LAMBDA_CONVENTION = (
    "operator lambda in (-1, inf); Karush-Kuhn-Tucker multiplier mu = 1 + lambda"
)

_BUILTINS = ("const", "z_bar", "abs2", "exp_x", "exp_xy", "basis")
_REGION_VARIANTS = ("radial_disc", "annulus", "sector", "mask", "full")


class SchemaError(ValueError):
    """A problem or solution document violates the interchange schema."""


def _as_pair(value) -> list[float]:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, (int, float)) and np.isfinite(v) for v in value)
    ):
        raise SchemaError(f"expected a finite [re, im] pair, got {value!r}")
    return [float(value[0]), float(value[1])]


def encode_complex(c: complex) -> list[float]:
    return [float(np.real(c)), float(np.imag(c))]


def decode_complex(pair) -> complex:
    re, im = _as_pair(pair)
    return complex(re, im)


def encode_complex_array(values: np.ndarray) -> list[list[float]]:
    return [encode_complex(v) for v in np.asarray(values).ravel()]


def decode_complex_array(pairs) -> np.ndarray:
    if not isinstance(pairs, list):
        raise SchemaError("expected a list of [re, im] pairs")
    return np.array([decode_complex(p) for p in pairs], dtype=complex)


def _require(d: dict, key: str, kinds, what: str):
    if key not in d:
        raise SchemaError(f"{what} is missing required key {key!r}")
    value = d[key]
    if kinds is not None and not isinstance(value, kinds):
        raise SchemaError(f"{what} key {key!r} has invalid type {type(value).__name__}")
    return value


def normalize_function_spec(spec) -> dict:
    """Validate and canonicalize a FunctionSpec document."""
    if not isinstance(spec, dict):
        raise SchemaError("function spec must be an object")
    kind = _require(spec, "kind", str, "function spec")
    if kind == "coeffs":
        coeffs = _require(spec, "coeffs", list, "coeffs spec")
        return {"kind": "coeffs", "coeffs": [_as_pair(c) for c in coeffs]}
    if kind == "builtin":
        name = _require(spec, "name", str, "builtin spec")
        if name not in _BUILTINS:
            raise SchemaError(f"unknown builtin {name!r}; expected one of {_BUILTINS}")
        out = {"kind": "builtin", "name": name}
        if name == "const":
            out["value"] = _as_pair(spec.get("value", [1.0, 0.0]))
        elif name in ("exp_x", "exp_xy"):
            out["eps"] = float(_require(spec, "eps", (int, float), f"builtin {name}"))
        elif name == "basis":
            n = _require(spec, "n", int, "builtin basis")
            if n < 0:
                raise SchemaError("basis index must be >= 0")
            out["n"] = n
        return out
    if kind == "grid":
        values = _require(spec, "values", list, "grid spec")
        return {"kind": "grid", "values": [_as_pair(v) for v in values]}
    raise SchemaError(f"unknown function spec kind {kind!r}")


def function_from_spec(spec: dict, grid: DiscGrid) -> GridFunction:
    spec = normalize_function_spec(spec)
    if spec["kind"] == "coeffs":
        return AnalyticCoeffs(decode_complex_array(spec["coeffs"])).on_grid(grid)
    if spec["kind"] == "grid":
        values = decode_complex_array(spec["values"])
        if values.size != grid.shape[0] * grid.shape[1]:
            raise SchemaError(
                f"grid spec has {values.size} values, expected {grid.shape[0] * grid.shape[1]}"
            )
        return GridFunction(grid, values.reshape(grid.shape))
    name = spec["name"]
    z = grid.nodes
    if name == "const":
        return GridFunction.constant(grid, decode_complex(spec["value"]))
    if name == "z_bar":
        return GridFunction(grid, np.conj(z))
    if name == "abs2":
        return GridFunction(grid, (np.abs(z) ** 2).astype(complex))
    if name == "exp_x":
        return GridFunction(grid, np.exp(spec["eps"] * z.real).astype(complex))
    if name == "exp_xy":
        return GridFunction(grid, np.exp(spec["eps"] * z.real * z.imag).astype(complex))
    return AnalyticCoeffs.unit(spec["n"], spec["n"]).on_grid(grid)


def normalize_region_spec(spec) -> dict:
    if not isinstance(spec, dict):
        raise SchemaError("region spec must be an object")
    variant = _require(spec, "variant", str, "region spec")
    if variant not in _REGION_VARIANTS:
        raise SchemaError(f"unknown region variant {variant!r}")
    out = {"variant": variant, "complement": bool(spec.get("complement", False))}
    if variant in ("radial_disc", "annulus"):
        out["a"] = float(_require(spec, "a", (int, float), f"{variant} region"))
    elif variant == "sector":
        out["theta"] = float(_require(spec, "theta", (int, float), "sector region"))
    elif variant == "mask":
        values = _require(spec, "values", list, "mask region")
        out["values"] = [bool(v) for v in values]
    return out


def region_from_spec(spec: dict, grid: DiscGrid | None = None) -> Region:
    spec = normalize_region_spec(spec)
    variant = spec["variant"]
    try:
        if variant == "radial_disc":
            region = Region.radial_disc(spec["a"])
        elif variant == "annulus":
            region = Region.annulus(spec["a"])
        elif variant == "sector":
            region = Region.sector(spec["theta"])
        elif variant == "full":
            region = Region.full_disc()
        else:
            if grid is None:
                raise SchemaError("mask regions require grid dimensions")
            values = np.asarray(spec["values"], dtype=bool)
            if values.size != grid.shape[0] * grid.shape[1]:
                raise SchemaError(
                    f"mask has {values.size} entries, expected {grid.shape[0] * grid.shape[1]}"
                )
            region = Region.mask(values.reshape(grid.shape))
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    return region.complement() if spec["complement"] else region


def normalize_conductivity_spec(spec) -> dict:
    if not isinstance(spec, dict):
        raise SchemaError("conductivity spec must be an object")
    kind = _require(spec, "kind", str, "conductivity spec")
    if kind == "const":
        return {"kind": "const", "value": float(spec.get("value", 1.0))}
    if kind in ("exp_x", "exp_xy"):
        return {
            "kind": kind,
            "eps": float(_require(spec, "eps", (int, float), f"conductivity {kind}")),
        }
    raise SchemaError(f"unknown conductivity kind {kind!r}")


def conductivity_from_spec(spec: dict, grid: DiscGrid) -> Conductivity:
    spec = normalize_conductivity_spec(spec)
    if spec["kind"] == "const":
        return Conductivity.constant(grid, spec["value"])
    if spec["kind"] == "exp_x":
        return Conductivity.exp_x(grid, spec["eps"])
    return Conductivity.exp_xy(grid, spec["eps"])


def normalize_problem(doc) -> dict:
    """Validate a ProblemFile document and return its canonical form."""
    if not isinstance(doc, dict):
        raise SchemaError("problem document must be an object")
    grid_doc = _require(doc, "grid", dict, "problem")
    n_r = _require(grid_doc, "n_r", int, "grid spec")
    n_theta = _require(grid_doc, "n_theta", int, "grid spec")
    if n_r < 2 or n_theta < 4:
        raise SchemaError(f"grid must satisfy n_r >= 2, n_theta >= 4, got {n_r}, {n_theta}")
    m = _require(doc, "m", (int, float), "problem")
    if not np.isfinite(m) or m <= 0.0:
        raise SchemaError(f"constraint level m must be positive, got {m}")
    degree = _require(doc, "degree", int, "problem")
    if degree < 0:
        raise SchemaError("degree must be >= 0")
    out = {
        "grid": {"n_r": n_r, "n_theta": n_theta},
        "region_k": normalize_region_spec(_require(doc, "region_k", dict, "problem")),
        "h_k": normalize_function_spec(_require(doc, "h_k", dict, "problem")),
        "h_j": normalize_function_spec(_require(doc, "h_j", dict, "problem")),
        "m": float(m),
        "degree": degree,
    }
    if "conductivity" in doc:
        out["conductivity"] = normalize_conductivity_spec(doc["conductivity"])
        out["lift_tol"] = float(doc.get("lift_tol", 1e-9))
    return out


def problem_from_dict(doc: dict) -> BepProblem | FbepProblem:
    """Materialize a BEP or f-BEP (when a conductivity is given) problem."""
    doc = normalize_problem(doc)
    grid = build_grid(doc["grid"]["n_r"], doc["grid"]["n_theta"])
    k_region = region_from_spec(doc["region_k"], grid)
    j_region = k_region.complement()
    h_k = function_from_spec(doc["h_k"], grid)
    h_j = function_from_spec(doc["h_j"], grid)
    try:
        if "conductivity" in doc:
            return FbepProblem(
                f=conductivity_from_spec(doc["conductivity"], grid),
                k_region=k_region,
                j_region=j_region,
                h_k=h_k,
                h_j=h_j,
                m=doc["m"],
                degree=doc["degree"],
                lift_tol=doc["lift_tol"],
            )
        return BepProblem(
            k_region=k_region,
            j_region=j_region,
            h_k=h_k,
            h_j=h_j,
            m=doc["m"],
            degree=doc["degree"],
        )
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(str(exc)) from exc


def bep_solution_to_dict(sol: BepSolution, degree: int) -> dict:
    return {
        "kind": "bep",
        "tool_version": TOOL_VERSION,
        "degree": degree,
        "lambda_convention": LAMBDA_CONVENTION,
        "lambda": sol.lam,
        "coefficients": encode_complex_array(sol.g0.coeffs),
        "err_k": sol.err_k,
        "err_j": sol.err_j,
        "kkt_residual": sol.kkt_residual,
        "iterations": sol.iterations,
        "feasibility_distance": sol.feasibility,
        "saturated": sol.saturated,
        "degree_gap": sol.degree_gap,
    }


def fbep_solution_to_dict(sol: FbepSolution, degree: int, conjecture_residual: float) -> dict:
    return {
        "kind": "fbep",
        "tool_version": TOOL_VERSION,
        "degree": degree,
        "lambda_convention": LAMBDA_CONVENTION,
        "lambda": sol.lam,
        "mu": sol.mu,
        "basis": f"lifted e_0..e_{degree} and i e_0..i e_{degree}",
        "coefficients_real": [float(c) for c in sol.coeffs],
        "err_k": sol.err_k,
        "err_j": sol.err_j,
        "kkt_residual": sol.kkt_residual,
        "vekua_defect": sol.vekua_defect,
        "feasibility_distance": sol.feasibility,
        "saturated": sol.saturated,
        "basis_min_eigenvalue": sol.basis_min_eig,
        "dropped_basis_directions": sol.dropped,
        "conjecture_residual": conjecture_residual,
    }


def dumps_canonical(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot load {path}: {exc}") from exc


def write_json(path: str, doc: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(dumps_canonical(doc))

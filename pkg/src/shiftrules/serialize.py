"""JSON file formats for spectra, models, rules, and the CLI config.

Floats are written with Python's shortest round-trip representation, so
a file read back and rewritten is byte-identical.  Non-finite diagnostic
values (an infinite condition number, say) are stored as null.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .fourier import FourierModel
from .regularization import RegularizationConfig
from .spectrum import Spectrum
from .synthesis import ShiftRule
from .variance import OptimizationConfig


def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    return obj


def dump_json(data: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(_sanitize(data), indent=2, sort_keys=True) + "\n")


def dumps_report(data: dict) -> str:
    return json.dumps(_sanitize(data), indent=2, sort_keys=True)


def load_json(path: str | Path) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return data


# -- spectrum ----------------------------------------------------------------

def load_spectrum(path: str | Path) -> tuple[Spectrum, dict]:
    """Read a spectrum file; returns (Spectrum, extra fields like rel_tol)."""
    data = load_json(path)
    if "eigenvalues" not in data:
        raise ValueError(f"{path}: missing 'eigenvalues' field")
    values = data["eigenvalues"]
    if not isinstance(values, list) or not all(isinstance(v, (int, float)) for v in values):
        raise ValueError(f"{path}: 'eigenvalues' must be an array of numbers")
    spec = Spectrum(eigenvalues=tuple(float(v) for v in sorted(values)), label=data.get("label"))
    extra = {k: data[k] for k in ("rel_tol",) if k in data}
    return spec, extra


def save_spectrum(spec: Spectrum, path: str | Path, rel_tol: float | None = None) -> None:
    data: dict = {"eigenvalues": list(spec.eigenvalues)}
    if spec.label is not None:
        data["label"] = spec.label
    if rel_tol is not None:
        data["rel_tol"] = rel_tol
    dump_json(data, path)


# -- Fourier model -----------------------------------------------------------

def load_fourier_model(path: str | Path) -> FourierModel:
    data = load_json(path)
    if "a0" not in data:
        raise ValueError(f"{path}: missing 'a0' field")
    terms = data.get("terms", [])
    try:
        parsed = tuple(
            (float(t["omega"]), float(t["a"]), float(t["b"])) for t in terms
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed 'terms' entry: {exc}") from exc
    return FourierModel(a0=float(data["a0"]), terms=tuple(sorted(parsed)))


def save_fourier_model(model: FourierModel, path: str | Path) -> None:
    dump_json(
        {
            "a0": model.a0,
            "terms": [{"omega": w, "a": a, "b": b} for (w, a, b) in model.terms],
        },
        path,
    )


# -- shift rule --------------------------------------------------------------

def rule_to_dict(rule: ShiftRule) -> dict:
    return {
        "phases": [float(p) for p in rule.phases],
        "coefficients": [float(b) for b in rule.coefficients],
        "orders": [{"p": p, "weight": w} for (p, w) in rule.orders],
        "frequencies": [float(w) for w in rule.frequencies],
        "diagnostics": dict(rule.diagnostics),
    }


def save_rule(rule: ShiftRule, path: str | Path) -> None:
    dump_json(rule_to_dict(rule), path)


def load_rule(path: str | Path) -> ShiftRule:
    data = load_json(path)
    for key in ("phases", "coefficients", "orders"):
        if key not in data:
            raise ValueError(f"{path}: missing '{key}' field")
    orders = tuple((int(o["p"]), float(o["weight"])) for o in data["orders"])
    return ShiftRule(
        phases=np.asarray(data["phases"], dtype=float),
        coefficients=np.asarray(data["coefficients"], dtype=float),
        orders=orders,
        frequencies=tuple(float(w) for w in data.get("frequencies", [])),
        diagnostics=dict(data.get("diagnostics", {})),
    )


# -- CLI config --------------------------------------------------------------

DEFAULT_CONFIG = {
    "rel_tol": 1e-9,
    "dedup_tol": 1e-12,
    "validation_bound": 1e-8,
}


def load_config(path: str | Path | None) -> dict:
    """Merge a config file over the defaults; None means defaults only."""
    cfg = dict(DEFAULT_CONFIG)
    cfg["regularization"] = {}
    cfg["optimization"] = {}
    if path is not None:
        data = load_json(path)
        for key in DEFAULT_CONFIG:
            if key in data:
                cfg[key] = float(data[key])
        cfg["regularization"] = data.get("regularization", {}) or {}
        cfg["optimization"] = data.get("optimization", {}) or {}
    return cfg


def regularization_config(section: dict) -> RegularizationConfig:
    gamma = section.get("gamma", "auto")
    if isinstance(gamma, str):
        if gamma.lower() != "auto":
            raise ValueError(f"gamma must be a number or 'auto', got {gamma!r}")
        gamma = None
    grid = section.get("grid", {}) or {}
    return RegularizationConfig(
        gamma=gamma,
        data_error=float(section.get("data_error", 0.0)),
        operator_error=float(section.get("operator_error", 0.0)),
        grid_min=float(grid.get("min", 1e-14)),
        grid_max=float(grid.get("max", 1e2)),
        grid_points=int(grid.get("points", 33)),
    )


def optimization_config(section: dict, seed: int = 0) -> OptimizationConfig:
    return OptimizationConfig(
        max_iters=int(section.get("max_iters", 300)),
        tol=float(section.get("tol", 1e-9)),
        multistarts=int(section.get("multistarts", 8)),
        seed=seed,
    )

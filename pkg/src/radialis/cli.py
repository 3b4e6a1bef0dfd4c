"""Config-driven command line wiring the modules into reproducible runs.

Subcommands: classify, indicial, residual, solve, sweep, compare.  A run
is described by a JSON config file; a handful of flags override config
fields (flags win).  Reports are canonical JSON — identical configs
produce byte-identical bytes, floats serialized at 17 significant digits
— with the fully resolved config and a sha256 provenance hash embedded.
Plot-ready data goes to plain comma-delimited text with a single header
line naming columns and units.

Exit codes: 0 success, 2 config error, 3 numerical failure (or state not
found), 4 regime refusal (fall to center without a cutoff).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .errors import ConfigError, NumericalError, RegimeRefusal, StateNotFound
from .indicial import (BoundaryPolicy, Dirichlet, IndicialResult, SAEMixing,
                       SquareIntegrableOnly, admissible_behaviors,
                       indicial_exponents)
from .numerics import GridSpacing, RadialGrid
from .point_source import (DEFAULT_TOLERANCE, ResidualReport, audit_eigenstate,
                           audit_samples, point_source_strength)
from .potentials import Potential, PotentialClassKind, classify, make_builtin
from .shooting import (Eigenstate, SolveRequest, SolveTolerances,
                       energy_ratios, request_indicial, spectrum)

__all__ = [
    "ExperimentConfig",
    "RunResult",
    "canonical_json",
    "load_config",
    "build_potential",
    "build_policy",
    "build_grid",
    "build_request",
    "run_classify",
    "run_indicial",
    "run_solve",
    "run_compare",
    "run_sweep",
    "run_residual",
    "parse_form",
    "emit_plot_data",
    "main",
]

_R_UNIT = "r[natural-units]"
_U_UNIT = "u[natural-units^-1/2]"
_E_UNIT = "natural-units"


# ---------------------------------------------------------------------------
# canonical serialization


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def canonical_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: fixed indentation, 17-significant-digit floats.

    Non-finite floats are rendered as the strings "inf", "-inf", "nan"
    (JSON has no literals for them).
    """
    if isinstance(obj, np.bool_):
        obj = bool(obj)
    elif isinstance(obj, np.integer):
        obj = int(obj)
    elif isinstance(obj, np.floating):
        obj = float(obj)
    pad = "  " * indent
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f"{pad}  {json.dumps(str(k))}: {canonical_json(v, indent + 1)}"
            for k, v in obj.items())
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        seq = list(obj)
        if not seq:
            return "[]"
        items = ",\n".join(f"{pad}  {canonical_json(v, indent + 1)}" for v in seq)
        return "[\n" + items + "\n" + pad + "]"
    raise ConfigError(f"cannot serialize value of type {type(obj).__name__}")


def _sha256_of(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# config schema


_GRID_DEFAULTS = {"r_min": 1e-6, "r_max": 40.0, "n_points": 4000,
                  "spacing": "linear"}
_TOL_DEFAULTS = {"energy_rel": 1e-10, "max_bisection_iters": 200}
_OUTPUT_DEFAULTS = {"report": None, "plot_dir": None, "format": "json"}
_POLICY_NAMES = ("dirichlet", "square_integrable_only", "sae_mixing")


def _expect_map(val, path: str) -> dict:
    if not isinstance(val, dict):
        raise ConfigError(f"{path}: expected an object, got {type(val).__name__}")
    return val


def _expect_number(val, path: str) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {val!r}")
    out = float(val)
    if not math.isfinite(out):
        raise ConfigError(f"{path}: must be finite, got {val!r}")
    return out


def _expect_int(val, path: str, minimum: int | None = None) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{path}: expected an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {val}")
    return val


def _expect_str(val, path: str, choices: tuple[str, ...] | None = None) -> str:
    if not isinstance(val, str):
        raise ConfigError(f"{path}: expected a string, got {val!r}")
    if choices is not None and val not in choices:
        raise ConfigError(f"{path}: expected one of {', '.join(choices)}, got {val!r}")
    return val


def _reject_unknown(d: dict, known: tuple[str, ...], path: str):
    for key in d:
        if key not in known:
            raise ConfigError(f"{path}{key}: unknown config key")


def _norm_potential(val, path: str) -> dict:
    d = _expect_map(val, path)
    _reject_unknown(d, ("kind", "params"), path + ".")
    kind = _expect_str(d.get("kind"), path + ".kind")
    params = _expect_map(d.get("params", {}), path + ".params")
    out_params = {}
    for key in params:
        out_params[str(key)] = _expect_number(params[key], f"{path}.params.{key}")
    return {"kind": kind, "params": out_params}


def _norm_policy(val, path: str) -> dict:
    d = _expect_map(val, path)
    _reject_unknown(d, ("name", "chi", "r_s"), path + ".")
    name = _expect_str(d.get("name"), path + ".name", _POLICY_NAMES)
    if name != "sae_mixing":
        for key in ("chi", "r_s"):
            if key in d:
                raise ConfigError(
                    f"{path}.{key}: only meaningful for the sae_mixing policy")
        return {"name": name}
    if "chi" not in d:
        raise ConfigError(f"{path}.chi: required for the sae_mixing policy")
    chi = _expect_number(d["chi"], path + ".chi")
    r_s = _expect_number(d.get("r_s", 1.0), path + ".r_s")
    return {"name": name, "chi": chi, "r_s": r_s}


def _norm_grid(val, path: str) -> dict:
    d = dict(_GRID_DEFAULTS)
    given = _expect_map(val, path)
    _reject_unknown(given, tuple(_GRID_DEFAULTS), path + ".")
    d.update(given)
    return {
        "r_min": _expect_number(d["r_min"], path + ".r_min"),
        "r_max": _expect_number(d["r_max"], path + ".r_max"),
        "n_points": _expect_int(d["n_points"], path + ".n_points", minimum=16),
        "spacing": _expect_str(d["spacing"], path + ".spacing",
                               ("linear", "logarithmic")),
    }


def _norm_tolerances(val, path: str) -> dict:
    d = dict(_TOL_DEFAULTS)
    given = _expect_map(val, path)
    _reject_unknown(given, tuple(_TOL_DEFAULTS), path + ".")
    d.update(given)
    return {
        "energy_rel": _expect_number(d["energy_rel"], path + ".energy_rel"),
        "max_bisection_iters": _expect_int(d["max_bisection_iters"],
                                           path + ".max_bisection_iters", minimum=8),
    }


def _norm_sweep(val, path: str) -> dict:
    d = _expect_map(val, path)
    _reject_unknown(d, ("parameter", "values"), path + ".")
    parameter = _expect_str(d.get("parameter"), path + ".parameter",
                            ("chi", "v0", "l"))
    raw = d.get("values")
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path}.values: expected a non-empty list")
    values: list = []
    for i, item in enumerate(raw):
        if parameter == "l":
            values.append(_expect_int(item, f"{path}.values[{i}]", minimum=0))
        else:
            values.append(_expect_number(item, f"{path}.values[{i}]"))
    return {"parameter": parameter, "values": values}


def _norm_output(val, path: str) -> dict:
    d = dict(_OUTPUT_DEFAULTS)
    given = _expect_map(val, path)
    _reject_unknown(given, tuple(_OUTPUT_DEFAULTS), path + ".")
    d.update(given)
    for key in ("report", "plot_dir"):
        if d[key] is not None:
            d[key] = _expect_str(d[key], f"{path}.{key}")
    d["format"] = _expect_str(d["format"], path + ".format", ("json", "csv"))
    return d


_TOP_KEYS = ("potential", "mass", "l", "gamma", "policy", "policies", "grid",
             "energy_window", "states", "match_radius", "cutoff_radius",
             "tolerances", "sweep", "output")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved run description; round-trips through to_dict exactly."""

    potential: dict | None
    mass: float
    l: tuple[int, ...]
    gamma: float | None
    policy: dict
    policies: tuple[dict, ...] | None
    grid: dict
    energy_window: tuple[float, float] | None
    states: int
    match_radius: float | None
    cutoff_radius: float | None
    tolerances: dict
    sweep: dict | None
    output: dict

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        d = _expect_map(raw, "config")
        _reject_unknown(d, _TOP_KEYS, "")
        potential = None
        if d.get("potential") is not None:
            potential = _norm_potential(d["potential"], "potential")
        mass = _expect_number(d.get("mass", 1.0), "mass")
        if mass <= 0.0:
            raise ConfigError(f"mass: must be > 0, got {mass!r}")
        raw_l = d.get("l", 0)
        if isinstance(raw_l, list):
            if not raw_l:
                raise ConfigError("l: list must be non-empty")
            l = tuple(_expect_int(v, f"l[{i}]", minimum=0)
                      for i, v in enumerate(raw_l))
        else:
            l = (_expect_int(raw_l, "l", minimum=0),)
        gamma = None
        if d.get("gamma") is not None:
            gamma = _expect_number(d["gamma"], "gamma")
        policy = _norm_policy(d.get("policy", {"name": "dirichlet"}), "policy")
        policies = None
        if d.get("policies") is not None:
            raw_pols = d["policies"]
            if not isinstance(raw_pols, list) or not raw_pols:
                raise ConfigError("policies: expected a non-empty list")
            policies = tuple(_norm_policy(p, f"policies[{i}]")
                             for i, p in enumerate(raw_pols))
        grid = _norm_grid(d.get("grid", {}), "grid")
        window = None
        if d.get("energy_window") is not None:
            raw_w = d["energy_window"]
            if not isinstance(raw_w, list) or len(raw_w) != 2:
                raise ConfigError("energy_window: expected [E_lo, E_hi]")
            window = (_expect_number(raw_w[0], "energy_window[0]"),
                      _expect_number(raw_w[1], "energy_window[1]"))
            if not window[0] < window[1]:
                raise ConfigError(
                    f"energy_window: E_lo must be < E_hi, got {raw_w!r}")
        states = _expect_int(d.get("states", 4), "states", minimum=1)
        match_radius = None
        if d.get("match_radius") is not None:
            match_radius = _expect_number(d["match_radius"], "match_radius")
        cutoff_radius = None
        if d.get("cutoff_radius") is not None:
            cutoff_radius = _expect_number(d["cutoff_radius"], "cutoff_radius")
        tolerances = _norm_tolerances(d.get("tolerances", {}), "tolerances")
        sweep = None
        if d.get("sweep") is not None:
            sweep = _norm_sweep(d["sweep"], "sweep")
        output = _norm_output(d.get("output", {}), "output")
        return cls(potential=potential, mass=mass, l=l, gamma=gamma,
                   policy=policy, policies=policies, grid=grid,
                   energy_window=window, states=states,
                   match_radius=match_radius, cutoff_radius=cutoff_radius,
                   tolerances=tolerances, sweep=sweep, output=output)

    def to_dict(self) -> dict:
        return {
            "potential": None if self.potential is None else
            {"kind": self.potential["kind"],
             "params": dict(self.potential["params"])},
            "mass": self.mass,
            "l": list(self.l),
            "gamma": self.gamma,
            "policy": dict(self.policy),
            "policies": None if self.policies is None else
            [dict(p) for p in self.policies],
            "grid": dict(self.grid),
            "energy_window": None if self.energy_window is None else
            list(self.energy_window),
            "states": self.states,
            "match_radius": self.match_radius,
            "cutoff_radius": self.cutoff_radius,
            "tolerances": dict(self.tolerances),
            "sweep": None if self.sweep is None else
            {"parameter": self.sweep["parameter"],
             "values": list(self.sweep["values"])},
            "output": dict(self.output),
        }


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config syntax error in {path}: {exc}") from None
    return ExperimentConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# builders


def build_potential(spec: dict) -> Potential:
    return make_builtin(spec["kind"], **spec["params"])


def build_policy(spec: dict) -> BoundaryPolicy:
    name = spec["name"]
    if name == "dirichlet":
        return Dirichlet()
    if name == "square_integrable_only":
        return SquareIntegrableOnly()
    return SAEMixing(chi=spec["chi"], r_s=spec.get("r_s", 1.0))


def build_grid(spec: dict) -> RadialGrid:
    spacing = (GridSpacing.LINEAR if spec["spacing"] == "linear"
               else GridSpacing.LOGARITHMIC)
    return RadialGrid(r_min=spec["r_min"], r_max=spec["r_max"],
                      n_points=spec["n_points"], spacing=spacing)


def build_request(cfg: ExperimentConfig, l: int,
                  policy_spec: dict | None = None) -> SolveRequest:
    if cfg.potential is None:
        raise ConfigError("potential: required for this command")
    if cfg.energy_window is None:
        raise ConfigError("energy_window: required for this command")
    spec = cfg.policy if policy_spec is None else policy_spec
    return SolveRequest(
        potential=build_potential(cfg.potential),
        mass=cfg.mass,
        l=l,
        policy=build_policy(spec),
        grid=build_grid(cfg.grid),
        energy_window=cfg.energy_window,
        match_radius=cfg.match_radius,
        cutoff_radius=cfg.cutoff_radius,
        tolerances=SolveTolerances(
            energy_rel=cfg.tolerances["energy_rel"],
            max_bisection_iters=cfg.tolerances["max_bisection_iters"]),
    )


def _policy_label(spec: dict) -> str:
    if spec["name"] == "sae_mixing":
        return f"sae_mixing(chi={spec['chi']:g},r_s={spec['r_s']:g})"
    return spec["name"]


# ---------------------------------------------------------------------------
# run results


@dataclass
class RunResult:
    """A finished run: the JSON-ready report plus plot-ready artifacts."""

    command: str
    report: dict
    states: list[tuple[str, Eigenstate]] = field(default_factory=list)
    table: tuple[list[str], list[list]] | None = None

    @property
    def csv_rows(self) -> tuple[list[str], list[list]]:
        if self.table is not None:
            return self.table
        header = ["key", "value"]
        rows = [[k, v] for k, v in _flatten(self.report.get("result", self.report))]
        return header, rows


def _flatten(obj, prefix: str = ""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def _base_report(command: str, cfg: ExperimentConfig | None,
                 extra_source: dict | None = None) -> dict:
    report: dict = {"command": command, "package_version": __version__}
    if cfg is not None:
        resolved = cfg.to_dict()
        report["config"] = resolved
        report["provenance"] = {
            "config_sha256": _sha256_of(resolved),
            "grid": dict(cfg.grid),
            "tolerances": dict(cfg.tolerances),
        }
    if extra_source is not None:
        report["source"] = extra_source
        report["provenance"] = {"source_sha256": _sha256_of(extra_source)}
    return report


def _complex_dict(z: complex) -> dict:
    return {"re": z.real, "im": z.imag}


def _ind_to_dict(ind: IndicialResult) -> dict:
    return {
        "l": ind.l,
        "gamma": ind.gamma,
        "discriminant": ind.discriminant,
        "P": _complex_dict(ind.p),
        "exponents": [_complex_dict(a) for a in ind.exponents],
        "regime": ind.regime.value,
    }


def _indicial_dict(l: int, gamma: float) -> dict:
    return _ind_to_dict(indicial_exponents(l, gamma))


def _state_dict(s: Eigenstate) -> dict:
    return {
        "n_r": s.node_count,
        "energy": s.energy,
        "energy_resolution": s.energy_resolution,
        "norm_check": s.norm_check,
        "match_radius": s.match_radius,
        "seed_exponent": s.seed_exponent,
    }


def _residual_dict(rep: ResidualReport) -> dict:
    return {
        "radii": list(rep.radii),
        "flux_values": list(rep.flux_values),
        "extrapolated_strength": rep.extrapolated_strength,
        "compatible": rep.compatible,
        "diverged": rep.diverged,
        "tolerance": rep.tolerance,
        "fit_exponent": rep.fit_exponent,
    }


# ---------------------------------------------------------------------------
# subcommand runners


_CLASS_NAMES = {
    PotentialClassKind.REGULAR: "Regular",
    PotentialClassKind.TRANSITIVE_SINGULAR: "TransitiveSingular",
    PotentialClassKind.STRONGLY_SINGULAR: "StronglySingular",
}


def run_classify(cfg: ExperimentConfig) -> RunResult:
    if cfg.potential is None:
        raise ConfigError("potential: required for classify")
    pot = build_potential(cfg.potential)
    cls = classify(pot)
    gamma = None
    v0 = None
    if cls.kind is PotentialClassKind.TRANSITIVE_SINGULAR:
        v0 = cls.v0
        gamma = 2.0 * cfg.mass * cls.v0
    elif cls.kind is PotentialClassKind.REGULAR:
        gamma = 0.0
    report = _base_report("classify", cfg)
    report["result"] = {
        "class": _CLASS_NAMES[cls.kind],
        "solvable": cls.solvable,
        "v0": v0,
        "gamma": gamma,
        "label": pot.label,
    }
    return RunResult("classify", report)


def _gamma_from_config(cfg: ExperimentConfig) -> float:
    if cfg.gamma is not None and cfg.potential is not None:
        raise ConfigError("gamma: give either gamma or a potential, not both")
    if cfg.gamma is not None:
        return cfg.gamma
    if cfg.potential is None:
        raise ConfigError("gamma: required (or provide a potential to derive it)")
    cls = classify(build_potential(cfg.potential))
    if cls.kind is PotentialClassKind.STRONGLY_SINGULAR:
        raise ConfigError("potential: strongly singular potentials have no "
                          "inverse-square origin form")
    v0 = cls.v0 if cls.kind is PotentialClassKind.TRANSITIVE_SINGULAR else 0.0
    return 2.0 * cfg.mass * v0


def run_indicial(cfg: ExperimentConfig) -> RunResult:
    gamma = _gamma_from_config(cfg)
    policy = build_policy(cfg.policy)
    entries = []
    for l in cfg.l:
        entry = _indicial_dict(l, gamma)
        try:
            adm = admissible_behaviors(indicial_exponents(l, gamma), policy)
            entry["admissible"] = {
                "policy": _policy_label(cfg.policy),
                "exponents": [_complex_dict(a) for a in adm.exponents],
                "needs_extension_parameter": adm.needs_extension_parameter,
                "degenerate": adm.degenerate,
                "fall_to_center": adm.fall_to_center,
            }
        except ConfigError as exc:
            entry["admissible"] = None
            entry["admissible_error"] = str(exc)
        entries.append(entry)
    report = _base_report("indicial", cfg)
    report["result"] = {"entries": entries}
    header = ["l", "gamma", "discriminant", "P_re", "P_im", "regime"]
    rows = [[e["l"], e["gamma"], e["discriminant"], e["P"]["re"], e["P"]["im"],
             e["regime"]] for e in entries]
    return RunResult("indicial", report, table=(header, rows))


def run_solve(cfg: ExperimentConfig) -> RunResult:
    policy_label = _policy_label(cfg.policy)
    per_l = []
    artifacts: list[tuple[str, Eigenstate]] = []
    for l in cfg.l:
        req = build_request(cfg, l)
        states = spectrum(req, cfg.states)
        entry = {
            "l": l,
            "policy": policy_label,
            "indicial": _ind_to_dict(request_indicial(req)),
            "states": [_state_dict(s) for s in states],
            "energy_ratios": energy_ratios(states) if len(states) > 1 else [],
        }
        per_l.append(entry)
        for s in states:
            artifacts.append((f"l{l}_n{s.node_count}", s))
    report = _base_report("solve", cfg)
    report["result"] = {"spectra": per_l}
    header = ["l", "n_r", f"energy[{_E_UNIT}]", "norm_check", "match_radius",
              "seed_exponent"]
    rows = [[e["l"], s["n_r"], s["energy"], s["norm_check"], s["match_radius"],
             s["seed_exponent"]] for e in per_l for s in e["states"]]
    return RunResult("solve", report, states=artifacts, table=(header, rows))


def run_compare(cfg: ExperimentConfig) -> RunResult:
    if cfg.policies is None or len(cfg.policies) < 2:
        raise ConfigError("policies: compare needs at least 2 policy specs")
    labels = [_policy_label(p) for p in cfg.policies]
    if len(set(labels)) != len(labels):
        raise ConfigError("policies: duplicate policy specs in compare")
    cells = []
    artifacts: list[tuple[str, Eigenstate]] = []
    found: dict[tuple[int, int], dict[str, float]] = {}
    for spec, label in zip(cfg.policies, labels):
        for l in cfg.l:
            cell = {"policy": label, "l": l, "error": None, "states": [],
                    "audits": []}
            try:
                req = build_request(cfg, l, policy_spec=spec)
                states = spectrum(req, cfg.states)
            except (ConfigError, NumericalError, RegimeRefusal, StateNotFound) as exc:
                cell["error"] = f"{type(exc).__name__}: {exc}"
                cells.append(cell)
                continue
            for s in states:
                cell["states"].append(_state_dict(s))
                try:
                    audit = _residual_dict(audit_eigenstate(s))
                    audit["n_r"] = s.node_count
                    audit = {"n_r": audit.pop("n_r"), **audit}
                except (ConfigError, NumericalError) as exc:
                    audit = {"n_r": s.node_count,
                             "error": f"{type(exc).__name__}: {exc}"}
                cell["audits"].append(audit)
                found.setdefault((l, s.node_count), {})[label] = s.energy
                safe = re.sub(r"[^A-Za-z0-9_.-]+", "_", label)
                artifacts.append((f"{safe}_l{l}_n{s.node_count}", s))
            cells.append(cell)
    matrix = []
    flagged = []
    for (l, n_r) in sorted(found):
        row = {"l": l, "n_r": n_r,
               "energies": {lab: found[(l, n_r)].get(lab) for lab in labels}}
        matrix.append(row)
        have = [lab for lab in labels if found[(l, n_r)].get(lab) is not None]
        if 0 < len(have) < len(labels):
            flagged.append({"l": l, "n_r": n_r, "present_under": have,
                            "absent_under": [lab for lab in labels
                                             if lab not in have]})
    indicial_summary = []
    if cfg.potential is not None:
        gamma = _gamma_from_config(replace(cfg, gamma=None))
        indicial_summary = [_indicial_dict(l, gamma) for l in cfg.l]
    report = _base_report("compare", cfg)
    report["result"] = {
        "policies": labels,
        "indicial": indicial_summary,
        "cells": cells,
        "spectrum_matrix": matrix,
        "policy_disagreements": flagged,
    }
    header = ["policy", "l", "n_r", f"energy[{_E_UNIT}]", "error"]
    rows = []
    for cell in cells:
        if cell["error"] is not None:
            rows.append([cell["policy"], cell["l"], None, None, cell["error"]])
        for s in cell["states"]:
            rows.append([cell["policy"], cell["l"], s["n_r"], s["energy"], None])
    return RunResult("compare", report, states=artifacts, table=(header, rows))


def _worker_count() -> int:
    raw = os.environ.get("RADIALIS_WORKERS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigError(
            f"RADIALIS_WORKERS: must be a positive integer, got {raw!r}")
    return n


def run_sweep(cfg: ExperimentConfig) -> RunResult:
    if cfg.sweep is None:
        raise ConfigError("sweep: required for the sweep command")
    parameter = cfg.sweep["parameter"]
    values = cfg.sweep["values"]
    if parameter == "chi" and cfg.policy["name"] != "sae_mixing":
        raise ConfigError("sweep.parameter: a chi sweep requires an "
                          "sae_mixing policy")
    if len(cfg.l) != 1 and parameter != "l":
        raise ConfigError("l: sweeps run at a single l; give one value")

    def request_for(value):
        if parameter == "chi":
            spec = dict(cfg.policy)
            spec["chi"] = float(value)
            return build_request(cfg, cfg.l[0], policy_spec=spec)
        if parameter == "v0":
            if cfg.potential is None:
                raise ConfigError("potential: required for a v0 sweep")
            pot = {"kind": cfg.potential["kind"],
                   "params": {**cfg.potential["params"], "v0": float(value)}}
            return build_request(replace(cfg, potential=pot), cfg.l[0])
        return build_request(cfg, int(value))

    def solve_one(value):
        try:
            states = spectrum(request_for(value), cfg.states)
            return {"value": value, "error": None,
                    "energies": [s.energy for s in states],
                    "node_counts": [s.node_count for s in states]}
        except (ConfigError, NumericalError, RegimeRefusal, StateNotFound) as exc:
            return {"value": value, "error": f"{type(exc).__name__}: {exc}",
                    "energies": [], "node_counts": []}

    workers = _worker_count()
    if workers == 1:
        rows = [solve_one(v) for v in values]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(solve_one, values))

    report = _base_report("sweep", cfg)
    report["result"] = {"parameter": parameter, "rows": rows}
    width = max((len(r["energies"]) for r in rows), default=0)
    header = [parameter] + [f"E_{k}[{_E_UNIT}]" for k in range(width)]
    table_rows = []
    for r in rows:
        padded = list(r["energies"]) + [None] * (width - len(r["energies"]))
        table_rows.append([r["value"]] + padded)
    return RunResult("sweep", report, table=(header, table_rows))


# ---------------------------------------------------------------------------
# residual subcommand


_TERM_RE = re.compile(
    r"^(?P<coef>[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)?"
    r"(?P<star>\*)?"
    r"(?P<rpart>r(?:\^(?P<exp>[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?))?)?$")


def parse_form(expr: str):
    """Parse an analytic probe like "r^0.6", "const", or "r + 0.5".

    Grammar: terms joined by '+', each term ``[coef][*]r[^exp]`` — a bare
    coefficient is a constant term, bare ``r`` has exponent 1.  Returns
    (u, du, terms) with callables for the function and its derivative.
    """
    text = expr.strip()
    if text == "const":
        text = "1"
    terms: list[tuple[float, float]] = []
    for raw_term in text.split("+"):
        term = raw_term.replace(" ", "")
        if not term:
            raise ConfigError(f"--form: empty term in {expr!r}")
        m = _TERM_RE.match(term)
        if not m or (m.group("coef") is None and m.group("rpart") is None):
            raise ConfigError(f"--form: cannot parse term {raw_term.strip()!r}")
        coef = float(m.group("coef")) if m.group("coef") is not None else 1.0
        if m.group("rpart") is None:
            exp = 0.0
        elif m.group("exp") is None:
            exp = 1.0
        else:
            exp = float(m.group("exp"))
        terms.append((coef, exp))

    def u(r: float) -> float:
        return sum(c * r ** e for c, e in terms)

    def du(r: float) -> float:
        return sum(c * e * r ** (e - 1.0) for c, e in terms if e != 0.0)

    return u, du, terms


def _read_state_file(path: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError:
        raise ConfigError(f"state file not found: {path}") from None
    except ValueError:
        try:
            data = np.loadtxt(path, skiprows=1, ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"state file {path}: cannot parse: {exc}") from None
    if data.ndim != 2 or data.shape[1] < 2 or data.shape[0] < 8:
        raise ConfigError(
            f"state file {path}: expected >= 8 rows of (r, u) columns")
    return data[:, 0], data[:, 1]


def run_residual(state: str | None, form: str | None,
                 tol: float = DEFAULT_TOLERANCE) -> RunResult:
    if (state is None) == (form is None):
        raise ConfigError("residual: give exactly one of --state or --form")
    if not (math.isfinite(tol) and tol > 0.0):
        raise ConfigError(f"--tol: must be finite and > 0, got {tol!r}")
    if form is not None:
        u, du, terms = parse_form(form)
        rep = point_source_strength(u, du, tol=tol)
        source = {"form": form,
                  "terms": [{"coefficient": c, "exponent": e} for c, e in terms],
                  "tolerance": tol}
    else:
        r, uvals = _read_state_file(state)
        rep = audit_samples(r, uvals, tol=tol)
        source = {"state_file": os.path.basename(state), "tolerance": tol}
    report = _base_report("residual", None, extra_source=source)
    report["result"] = _residual_dict(rep)
    header = ["probe_radius[natural-units]", "flux[natural-units^-1/2]"]
    rows = [[a, s] for a, s in zip(rep.radii, rep.flux_values)]
    return RunResult("residual", report, table=(header, rows))


# ---------------------------------------------------------------------------
# plot data


def _fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(v)


def _write_delimited(path: str, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt_cell(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_plot_data(result: RunResult, out_dir: str) -> list[str]:
    """Write plot-ready delimited files for a finished run.

    Per-state files carry (r, u) columns; table-shaped runs (solve
    spectra, sweeps, comparisons) get one summary file.  An empty
    spectrum still produces the summary header line — absence of states
    is a reportable result, not an error.
    """
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []
    for label, state in result.states:
        path = os.path.join(out_dir, f"state_{label}.csv")
        rows = zip(state.grid.nodes, state.u.u)
        _write_delimited(path, [_R_UNIT, _U_UNIT], rows)
        written.append(path)
    if result.table is not None:
        header, rows = result.table
        path = os.path.join(out_dir, f"{result.command}.csv")
        _write_delimited(path, header, rows)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# entry point


def _add_common(sub: argparse.ArgumentParser, config_required: bool = True):
    sub.add_argument("--config", required=config_required,
                     help="path to the JSON experiment config")
    sub.add_argument("--out", help="write the report here instead of stdout")
    sub.add_argument("--format", choices=("json", "csv"),
                     help="report format (default json)")
    sub.add_argument("--tol-energy", type=float,
                     help="override tolerances.energy_rel")
    sub.add_argument("--grid-points", type=int,
                     help="override grid.n_points")
    sub.add_argument("--r-max", type=float, help="override grid.r_max")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radialis",
        description="Classify radial potentials, expose their origin "
                    "behaviour, and solve bound states under competing "
                    "origin boundary policies.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
            ("classify", "classify a potential's origin behaviour"),
            ("indicial", "indicial exponents and admissibility per l"),
            ("solve", "bound-state spectrum under one policy"),
            ("sweep", "spectra along a chi, v0, or l sweep"),
            ("compare", "spectra under two or more policies side by side")):
        _add_common(sub.add_parser(name, help=text))
    res = sub.add_parser("residual",
                         help="point-source strength of a state or analytic form")
    _add_common(res, config_required=False)
    res.add_argument("--state", help="path to a (r, u) state file")
    res.add_argument("--form", help="analytic probe, e.g. 'r^0.6' or 'r + 0.5'")
    res.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE,
                     help="compatibility tolerance (default 1e-6)")
    return parser


def _apply_overrides(raw: dict, args) -> dict:
    if args.tol_energy is not None:
        raw.setdefault("tolerances", {})["energy_rel"] = args.tol_energy
    if args.grid_points is not None:
        raw.setdefault("grid", {})["n_points"] = args.grid_points
    if args.r_max is not None:
        raw.setdefault("grid", {})["r_max"] = args.r_max
    if args.out is not None:
        raw.setdefault("output", {})["report"] = args.out
    if args.format is not None:
        raw.setdefault("output", {})["format"] = args.format
    return raw


_RUNNERS = {
    "classify": run_classify,
    "indicial": run_indicial,
    "solve": run_solve,
    "sweep": run_sweep,
    "compare": run_compare,
}


def _render(result: RunResult, fmt: str) -> str:
    if fmt == "csv":
        header, rows = result.csv_rows
        lines = [",".join(header)]
        lines.extend(",".join(_fmt_cell(v) for v in row) for row in rows)
        return "\n".join(lines) + "\n"
    return canonical_json(result.report) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "residual":
            result = run_residual(args.state, args.form, tol=args.tol)
            fmt = args.format or "json"
            out_path = args.out
            plot_dir = None
        else:
            if args.config is None:
                raise ConfigError("--config is required")
            try:
                with open(args.config, "r", encoding="utf-8") as fh:
                    raw = json.load(fh)
            except FileNotFoundError:
                raise ConfigError(f"config file not found: {args.config}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(
                    f"config syntax error in {args.config}: {exc}") from None
            cfg = ExperimentConfig.from_dict(_apply_overrides(raw, args))
            result = _RUNNERS[args.command](cfg)
            fmt = cfg.output["format"]
            out_path = cfg.output["report"]
            plot_dir = cfg.output["plot_dir"]
        text = _render(result, fmt)
        if out_path is None:
            sys.stdout.write(text)
        else:
            with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        if plot_dir is not None:
            emit_plot_data(result, plot_dir)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RegimeRefusal as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 4
    except (NumericalError, StateNotFound) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

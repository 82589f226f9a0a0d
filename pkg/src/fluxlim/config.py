"""Run configuration: JSON parsing, validation of the initial data, built-in demos."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diagnostics import AuditTolerances
from .errors import ConfigError
from .fluid import Potential, project
from .grid import GridSpec, ScalarField, StateSnapshot, VectorField, grad_linf
from .integrator import SchemeConfig
from .sensitivity import FluxLimiter

SCHEMA = 1
FIELD_NAMES = ("n", "c", "m")


@dataclass
class RunConfig:
    grid: GridSpec
    limiter: FluxLimiter
    phi: Potential
    initial: dict
    scheme: SchemeConfig
    t_end: float
    record_every: float | None = None
    snapshot_every: float | None = None
    snapshot_format: str = "raw"
    guard: float = 1e6
    eps_conv: float = 1e-3
    audit: AuditTolerances = field(default_factory=AuditTolerances)
    output_dir: str = "out"
    name: str = "run"
    base_dir: Path = field(default_factory=Path.cwd)
    raw: dict = field(default_factory=dict, repr=False)

    def with_theta(self, theta: float) -> "RunConfig":
        d = copy.deepcopy(self.raw)
        d.setdefault("limiter", {})["theta"] = theta
        return parse_config(d, self.base_dir)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)


# -- parsing -----------------------------------------------------------------

_TOP_KEYS = {
    "schema", "name", "grid", "limiter", "phi", "initial", "scheme", "t_end", "record_every",
    "snapshot_every", "snapshot_format", "guard", "eps_conv", "audit", "output_dir",
}


def _num(d: dict, key: str, where: str, errors: list, default=None, positive=False, allow_none=False):
    if key not in d:
        if default is None and not allow_none:
            errors.append(f"{where}.{key}: required")
        return default
    v = d[key]
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        errors.append(f"{where}.{key}: expected a finite number, got {v!r}")
        return default
    if positive and v <= 0:
        errors.append(f"{where}.{key}: must be positive, got {v!r}")
        return default
    return float(v)


def parse_config(d: dict, base_dir=None) -> RunConfig:
    """Build a :class:`RunConfig`; every problem found is reported in one :class:`ConfigError`."""
    errors: list[str] = []
    if not isinstance(d, dict):
        raise ConfigError("config: expected a JSON object")
    if d.get("schema") != SCHEMA:
        errors.append(f"schema: expected {SCHEMA}, got {d.get('schema')!r}")
    for k in sorted(set(d) - _TOP_KEYS):
        errors.append(f"{k}: unknown key")

    grid = None
    g = d.get("grid")
    if not isinstance(g, dict):
        errors.append("grid: required object with 'cells'")
    else:
        try:
            grid = GridSpec(tuple(g["cells"]), tuple(g["lengths"]) if "lengths" in g else None)
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"grid: {exc}")

    lim = None
    ld = d.get("limiter", {})
    try:
        if ld.get("kind", "prototype") == "user-supplied":
            table = np.asarray(ld["table"], dtype=float)
            lim = FluxLimiter.tabulated(table[:, 0], table[:, 1], ld.get("k_s", 1.0), ld.get("theta", 1.0))
        else:
            lim = FluxLimiter(float(ld.get("k_s", 1.0)), float(ld.get("theta", 1.0)), ld.get("kind", "prototype"))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        errors.append(f"limiter: {exc}")

    phi = None
    pd = d.get("phi", {"kind": "zero"})
    try:
        phi = Potential(pd.get("kind", "zero"), tuple(pd.get("g", ())))
        if grid is not None and phi.kind == "linear":
            phi.gradient(grid.dim)
    except (TypeError, ValueError, AttributeError) as exc:
        errors.append(f"phi: {exc}")

    initial = d.get("initial")
    if not isinstance(initial, dict):
        errors.append("initial: required object with entries for n, c, m")
        initial = {}
    for name in FIELD_NAMES:
        if name not in initial:
            errors.append(f"initial.{name}: required")
        elif not isinstance(initial[name], dict) or "kind" not in initial[name]:
            errors.append(f"initial.{name}: expected an object with 'kind'")
        elif initial[name]["kind"] not in ("constant", "gaussian-bump", "file"):
            errors.append(f"initial.{name}.kind: unknown kind {initial[name]['kind']!r}")

    scheme = None
    sd = d.get("scheme", {})
    try:
        kw = {k: v for k, v in sd.items()}
        scheme = SchemeConfig(**kw)
    except (TypeError, ValueError) as exc:
        errors.append(f"scheme: {exc}")

    t_end = _num(d, "t_end", "config", errors)
    if t_end is not None and t_end < 0:
        errors.append("config.t_end: must be nonnegative")
    record_every = _num(d, "record_every", "config", errors, positive=True, allow_none=True)
    snapshot_every = _num(d, "snapshot_every", "config", errors, positive=True, allow_none=True)
    guard = _num(d, "guard", "config", errors, default=1e6, positive=True)
    eps_conv = _num(d, "eps_conv", "config", errors, default=1e-3, positive=True)
    fmt = d.get("snapshot_format", "raw")
    if fmt not in ("raw", "vtk", "both"):
        errors.append(f"snapshot_format: expected raw, vtk or both, got {fmt!r}")
    audit_tol = None
    try:
        audit_tol = AuditTolerances.from_dict(dict(d.get("audit", {})))
        if eps_conv is not None:
            audit_tol.eps_conv = eps_conv
        for k, v in vars(audit_tol).items():
            if not isinstance(v, bool) and not v > 0:
                errors.append(f"audit.{k}: must be positive")
    except (TypeError, ValueError) as exc:
        errors.append(f"audit: {exc}")

    if errors:
        raise ConfigError(errors)
    return RunConfig(
        grid=grid, limiter=lim, phi=phi, initial=initial, scheme=scheme, t_end=t_end,
        record_every=record_every, snapshot_every=snapshot_every, snapshot_format=fmt,
        guard=guard, eps_conv=eps_conv, audit=audit_tol,
        output_dir=str(d.get("output_dir", "out")), name=str(d.get("name", "run")),
        base_dir=Path(base_dir) if base_dir else Path.cwd(), raw=copy.deepcopy(d),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_config(d, path.parent)


# -- initial data --------------------------------------------------------------

def _sample(spec: dict, grid: GridSpec, base_dir: Path, where: str) -> np.ndarray:
    kind = spec["kind"]
    if kind == "constant":
        return np.full(grid.shape, float(spec["value"]))
    if kind == "gaussian-bump":
        center = [float(x) for x in spec["center"]]
        if len(center) != grid.dim:
            raise ConfigError(f"{where}.center: need {grid.dim} coordinates")
        w = float(spec["width"])
        if not w > 0:
            raise ConfigError(f"{where}.width: must be positive")
        r2 = sum((x - c) ** 2 for x, c in zip(grid.mesh(), center))
        vals = float(spec.get("floor", 0.0)) + float(spec.get("amplitude", 1.0)) * np.exp(-r2 / (2 * w * w))
        if "mass" in spec:
            total = float(vals.sum()) * grid.cell_volume
            if total <= 0:
                raise ConfigError(f"{where}.mass: cannot rescale a field with zero integral")
            vals = vals * (float(spec["mass"]) / total)
        return vals
    path = base_dir / spec["path"]
    if path.suffix == ".npy":
        vals = np.load(path)
    else:
        from .output import read_array

        vals = read_array(path)[1]
    if vals.size != grid.size:
        raise ConfigError(f"{where}.path: {path} has {vals.size} values, grid has {grid.size}")
    return np.asarray(vals, dtype=float).reshape(grid.shape)


@dataclass
class Validated:
    config: RunConfig
    state: StateSnapshot
    warnings: list


def validate(cfg: RunConfig) -> Validated:
    """Sample and check the initial data; the initial velocity is projected to be divergence free."""
    grid = cfg.grid
    errors, warnings = [], []
    fields = {}
    for name in FIELD_NAMES:
        where = f"initial.{name}"
        try:
            vals = _sample(cfg.initial[name], grid, cfg.base_dir, where)
        except ConfigError as exc:
            errors.extend(exc.errors)
            continue
        except (KeyError, TypeError, ValueError, OSError) as exc:
            errors.append(f"{where}: {exc}")
            continue
        if not np.all(np.isfinite(vals)):
            errors.append(f"{where}: non-finite values")
            continue
        if vals.min() < 0:
            idx = [int(i) for i in np.unravel_index(int(np.argmin(vals)), vals.shape)]
            errors.append(f"{name}0 negative at cell {idx}: {float(vals.min())!r}")
            continue
        if name != "n" and not math.isfinite(grad_linf(vals, grid)):
            errors.append(f"{where}: gradient not finite")
        fields[name] = vals
    if not cfg.limiter.in_proven_regime:
        warnings.append(
            f"limiter theta = {cfg.limiter.theta} is outside the proven regime of the boundedness "
            "result (theta > 0); blow-up is not excluded"
        )
    if grid.dim == 1 and not cfg.phi.is_zero():
        warnings.append("potential has no effect in 1-D (the velocity is identically zero)")
    if errors:
        raise ConfigError(errors)

    u = VectorField(grid)
    uspec = cfg.initial.get("u", {"kind": "zero"})
    if uspec.get("kind", "zero") != "zero" and grid.dim > 1:
        try:
            if uspec["kind"] == "random":
                rng = np.random.default_rng(int(uspec.get("seed", 0)))
                amp = float(uspec.get("amplitude", 1.0))
                u = VectorField(grid, [amp * rng.standard_normal(grid.face_shape(a)) for a in range(grid.dim)])
            elif uspec["kind"] == "file":
                data = np.load(cfg.base_dir / uspec["path"])
                u = VectorField(grid, [data[f"u{a}"] for a in range(grid.dim)])
            else:
                raise ConfigError(f"initial.u.kind: unknown kind {uspec['kind']!r}")
        except (KeyError, TypeError, ValueError, OSError) as exc:
            raise ConfigError(f"initial.u: {exc}") from exc
        u.enforce_no_slip()
        u, _phi, _rep = project(u, 1.0, tol=cfg.scheme.tol_poisson, precond=cfg.scheme.precond)
        div = float(np.max(np.abs(_div(u))))
        if div > cfg.scheme.tol_proj:
            raise ConfigError(f"initial.u: projection left max|div u| = {div:.3e}")
    state = StateSnapshot(
        ScalarField(grid, fields["n"]), ScalarField(grid, fields["c"]), ScalarField(grid, fields["m"]),
        u, ScalarField.zeros(grid), 0.0,
    )
    return Validated(cfg, state, warnings)


def _div(u: VectorField) -> np.ndarray:
    from . import _kernels as K

    return K.div(u.components, u.grid)


# -- demos --------------------------------------------------------------------

def _bump(center, mass, width=0.1, floor=0.05):
    return {"kind": "gaussian-bump", "center": center, "width": width, "amplitude": 1.0, "floor": floor, "mass": mass}


def demo_config(name: str) -> dict:
    """Built-in configurations: a sperm bump below an egg bump, ``int n0 = 2``, ``int m0 = 1``."""
    common = {
        "schema": SCHEMA,
        "limiter": {"kind": "prototype", "k_s": 1.0, "theta": 1.0},
        "scheme": {"dt": 1.0 / 32, "diffusion": "implicit-be", "cfl_safety": 0.8},
        "record_every": 0.25,
        "guard": 1e6,
        "eps_conv": 1e-3,
        "output_dir": f"out/{name}",
        "name": name,
    }
    if name == "demo1d":
        return {
            **common,
            "grid": {"cells": [64]},
            "phi": {"kind": "zero"},
            "initial": {"n": _bump([0.3], 2.0), "c": {"kind": "constant", "value": 0.0}, "m": _bump([0.7], 1.0)},
            "t_end": 12.0,
        }
    if name == "demo2d":
        return {
            **common,
            "grid": {"cells": [128, 128]},
            "phi": {"kind": "linear", "g": [0.0, -1.0]},
            "initial": {
                "n": _bump([0.5, 0.3], 2.0), "c": {"kind": "constant", "value": 0.0}, "m": _bump([0.5, 0.7], 1.0)
            },
            "t_end": 50.0,
        }
    if name == "demo3d":
        return {
            **common,
            "grid": {"cells": [32, 32, 32]},
            "phi": {"kind": "linear", "g": [0.0, 0.0, -1.0]},
            "initial": {
                "n": _bump([0.5, 0.5, 0.3], 2.0),
                "c": {"kind": "constant", "value": 0.0},
                "m": _bump([0.5, 0.5, 0.7], 1.0),
            },
            "t_end": 12.0,
        }
    raise KeyError(name)


DEMOS = ("demo1d", "demo2d", "demo3d")

"""JSON run configuration: parsing, validation and serialization.

A configuration describes one stack, its modulation, numerical settings and
the named sweeps to run. Energies may be written as expressions over
``Omega1`` and ``Omega2``, the single-interface surface-polariton energies of
body 1 and body 2 (e.g. ``"Omega1+Omega2"``, ``"2/3*Omega1"``).

Every problem found is collected and reported at once in a ConfigError,
each message prefixed with the JSON path and the line of the offending key.
"""
import ast
import copy
import json
import operator
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..engine.materials import (
    ConstantPermittivity,
    LorentzParams,
    ModulatedLayerSpec,
    PRESETS,
    surface_polariton_frequency,
)
from ..engine.floquet import HarmonicBasis
from ..engine.quadrature import QuadratureSpec
from ..engine.stack import Layer, LayerStack, stack_violations
from . import config
from .didyoumean import suggest, suggest_recipe

SWEEP_VARIABLES = ("mod_freq", "gap", "temperature", "z_height", "delta_eps")
# parameters a sweep may pin to a value other than the config default
FIXABLE = ("mod_freq", "gap", "temperature", "delta_eps")


class ConfigError(ValueError):
    def __init__(self, errors, path=None):
        self.errors = list(errors)
        self.path = path
        head = "invalid configuration%s" % (" %s" % path if path else "")
        super().__init__(head + ":\n  - " + "\n  - ".join(self.errors))


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: Optional[float] = None
    stop: Optional[float] = None
    points: int = 0
    scale: str = "linear"
    values: Optional[Tuple[float, ...]] = None
    temperatures: Tuple[float, ...] = ()
    spectra: bool = False
    figure: Optional[str] = None
    fixed: Tuple[Tuple[str, float], ...] = ()

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(
                "sweep variable %r not in %s (did you mean %s?)"
                % (self.variable, SWEEP_VARIABLES, suggest(self.variable, SWEEP_VARIABLES))
            )
        if self.values is None:
            if self.start is None or self.stop is None:
                raise ValueError("sweep needs either values or start/stop/points")
            if self.points < 2:
                raise ValueError("sweep needs at least 2 points, got %d" % self.points)
            if self.scale not in ("linear", "log"):
                raise ValueError("sweep scale must be linear or log, got %r" % self.scale)
            if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
                raise ValueError("log sweeps need positive endpoints")
        elif len(self.values) < 1:
            raise ValueError("sweep values must not be empty")

    def grid(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class RangeSpec:
    start: float
    stop: float
    points: int
    scale: str = "linear"

    def __post_init__(self):
        if self.points < 2:
            raise ValueError("range needs at least 2 points, got %d" % self.points)
        if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            raise ValueError("log ranges need positive endpoints")

    def grid(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class DispersionSpec:
    kpar: RangeSpec
    layered: bool = False
    figure: Optional[str] = None


@dataclass(frozen=True)
class PairSpec:
    label: str
    mod_freq: float
    delta_omega: float = 0.0


@dataclass(frozen=True)
class IndicatorSpec:
    pairs: Tuple[PairSpec, ...]
    z_nm: RangeSpec
    T_K: RangeSpec
    figure: Optional[str] = None


@dataclass(frozen=True)
class SimulationConfig:
    name: str
    stack: LayerStack
    temperature: float
    truncation: int
    quadrature: QuadratureSpec
    sweeps: Dict[str, SweepSpec]
    dispersion: Optional[DispersionSpec]
    indicator: Optional[IndicatorSpec]
    output_dir: str
    raw: dict = field(repr=False, compare=True)

    @property
    def mod_freq(self) -> float:
        return self.stack.modulation.mod_freq

    @property
    def delta_eps(self) -> float:
        return self.stack.modulation.delta_eps

    def basis(self, mod_freq=None, trunc=None) -> HarmonicBasis:
        """Harmonic basis at the modulation energy; the output energy is reset per node."""
        return HarmonicBasis(
            mod_freq or self.mod_freq, self.quadrature.omega_window[0], trunc or self.truncation
        )

    def sweep(self, name) -> SweepSpec:
        if name not in self.sweeps:
            raise ValueError(
                "no sweep %r in config %s. Did you mean %s ?"
                % (name, self.name, suggest(name, self.sweeps))
            )
        return self.sweeps[name]


KEYS = {
    "": {"name", "description", "stack", "modulation", "temperature_K", "truncation",
         "quadrature", "sweeps", "dispersion", "indicator", "output_dir"},
    "stack": {"body1", "body2", "gap_nm", "layer"},
    "material": {"preset", "kind", "eps_inf", "omega_L_meV", "omega_T_meV", "gamma_meV", "eps"},
    "layer": {"kind", "thickness_nm", "eps_static", "eps"},
    "modulation": {"mod_freq_meV", "delta_eps"},
    "quadrature": {"rel_tol", "abs_floor", "max_depth", "kpar_max_factor", "omega_window_meV"},
    "sweep": {"variable", "start", "stop", "points", "scale", "values", "temperatures_K",
              "spectra", "figure", "description", "fixed"},
    "range": {"start", "stop", "points", "scale"},
    "dispersion": {"kpar_per_nm", "layered", "figure"},
    "indicator": {"pairs", "z_nm", "T_K", "figure"},
    "pair": {"label", "mod_freq_meV", "delta_omega_meV"},
}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def evaluate_energy(expr, names: Dict[str, float]) -> float:
    """A number, or an arithmetic expression over ``names`` (+, -, *, /, parentheses)."""
    if isinstance(expr, bool):
        raise ValueError("expected an energy, got %r" % expr)
    if isinstance(expr, (int, float)):
        return float(expr)
    if not isinstance(expr, str):
        raise ValueError("expected a number or expression, got %r" % (expr,))

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ValueError(
                    "unknown symbol %r in %r (did you mean %s?)" % (node.id, expr, suggest(node.id, names))
                )
            return names[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            value = walk(node.operand)
            return -value if isinstance(node.op, ast.USub) else value
        raise ValueError("unsupported expression %r" % expr)

    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError:
        raise ValueError("cannot parse expression %r" % expr)
    return float(walk(tree))


class _Checker:
    """Collects errors with JSON paths and source line numbers."""

    def __init__(self, text=""):
        self.text = text
        self.errors: List[str] = []

    def line_of(self, path):
        pos = 0
        for part in path:
            if isinstance(part, int):
                continue
            found = self.text.find('"%s"' % part, pos)
            if found < 0:
                break
            pos = found
        return self.text.count("\n", 0, pos) + 1 if self.text else None

    def error(self, path, msg):
        where = "/".join(str(p) for p in path) or "<root>"
        line = self.line_of(path)
        self.errors.append("%s (line %s): %s" % (where, line, msg) if line else "%s: %s" % (where, msg))

    def keys(self, data, allowed, path):
        if not isinstance(data, dict):
            self.error(path, "expected an object, got %s" % type(data).__name__)
            return False
        for key in data:
            if key not in allowed:
                self.error(path + [key], "unknown key (did you mean %s?)" % suggest(key, sorted(allowed)))
        return True

    def require(self, data, key, path):
        if key not in data:
            self.error(path, "missing required key %r" % key)
            return False
        return True

    def number(self, data, key, path, default=None, positive=False, nonnegative=False, integer=False):
        if key not in data:
            if default is None:
                self.error(path, "missing required key %r" % key)
            return default
        value = data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.error(path + [key], "expected a number, got %r" % (value,))
            return default
        if integer and int(value) != value:
            self.error(path + [key], "expected an integer, got %r" % value)
            return default
        if positive and not value > 0:
            self.error(path + [key], "must be positive, got %r" % value)
            return default
        if nonnegative and value < 0:
            self.error(path + [key], "must be >= 0, got %r" % value)
            return default
        return int(value) if integer else float(value)

    def energy(self, data, key, path, names, default=None):
        if key not in data:
            if default is None:
                self.error(path, "missing required key %r" % key)
            return default
        try:
            return evaluate_energy(data[key], names)
        except (ValueError, ZeroDivisionError) as err:
            self.error(path + [key], str(err))
            return default

    def attempt(self, path, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, TypeError) as err:
            self.error(path, str(err))
            return None


def _material(chk: _Checker, data, path):
    if not chk.keys(data, KEYS["material"], path):
        return None
    if "preset" in data:
        extra = set(data) - {"preset"}
        if extra:
            chk.error(path, "preset materials take no other keys, got %s" % sorted(extra))
        if data["preset"] not in PRESETS:
            chk.error(path + ["preset"], "unknown preset %r (did you mean %s?)"
                      % (data["preset"], suggest(str(data["preset"]), PRESETS)))
            return None
        return PRESETS[data["preset"]]
    kind = data.get("kind")
    if kind == "lorentz":
        values = [chk.number(data, k, path) for k in ("eps_inf", "omega_L_meV", "omega_T_meV", "gamma_meV")]
        if None in values:
            return None
        return chk.attempt(path, LorentzParams, *values)
    if kind == "constant":
        return _constant(chk, data, path)
    chk.error(path, "material needs a preset or kind lorentz/constant, got kind %r" % kind)
    return None


def _constant(chk, data, path):
    if not chk.require(data, "eps", path):
        return None
    eps = data["eps"]
    if isinstance(eps, list) and len(eps) == 2 and all(isinstance(v, (int, float)) for v in eps):
        eps = complex(eps[0], eps[1])
    elif isinstance(eps, (int, float)) and not isinstance(eps, bool):
        eps = complex(eps)
    else:
        chk.error(path + ["eps"], "expected a number or [re, im], got %r" % (eps,))
        return None
    return chk.attempt(path + ["eps"], ConstantPermittivity, eps)


def _range(chk, data, path, names=None):
    if not chk.keys(data, KEYS["range"], path):
        return None
    start = chk.number(data, "start", path)
    stop = chk.number(data, "stop", path)
    points = chk.number(data, "points", path, integer=True)
    if None in (start, stop, points):
        return None
    return chk.attempt(path, RangeSpec, start, stop, points, data.get("scale", "linear"))


def _sweep(chk, data, path, names):
    if not chk.keys(data, KEYS["sweep"], path):
        return None
    variable = data.get("variable")

    def value(v, sub, var=variable):
        if var == "mod_freq":
            try:
                return evaluate_energy(v, names)
            except (ValueError, ZeroDivisionError) as err:
                chk.error(path + [sub], str(err))
                return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            chk.error(path + [sub], "expected a number, got %r" % (v,))
            return None
        return float(v)

    values = None
    if "values" in data:
        if not isinstance(data["values"], list):
            chk.error(path + ["values"], "expected a list")
            return None
        values = tuple(value(v, "values") for v in data["values"])
        if None in values:
            return None
    start = value(data["start"], "start") if "start" in data else None
    stop = value(data["stop"], "stop") if "stop" in data else None
    points = chk.number(data, "points", path, default=0, integer=True)
    temps = data.get("temperatures_K", [])
    if not isinstance(temps, list) or any(
        isinstance(t, bool) or not isinstance(t, (int, float)) or t < 0 for t in temps
    ):
        chk.error(path + ["temperatures_K"], "expected a list of temperatures >= 0")
        temps = []
    fixed = []
    fdata = data.get("fixed", {})
    if chk.keys(fdata, FIXABLE, path + ["fixed"]):
        for key in sorted(fdata):
            if key == variable:
                chk.error(path + ["fixed", key], "the swept variable cannot also be fixed")
            elif key in FIXABLE:
                v = value(fdata[key], "fixed", var=key)
                if v is not None:
                    fixed.append((key, v))
    return chk.attempt(
        path, SweepSpec, variable, start, stop, points, data.get("scale", "linear"), values,
        tuple(float(t) for t in temps), bool(data.get("spectra", False)), data.get("figure"),
        tuple(fixed),
    )


def build_config(data, text="", source=None) -> SimulationConfig:
    chk = _Checker(text)
    if not chk.keys(data, KEYS[""], []):
        raise ConfigError(chk.errors, source)
    missing = [key for key in ("name", "stack", "modulation") if not chk.require(data, key, [])]
    if missing:
        raise ConfigError(chk.errors, source)

    stack_data = data["stack"]
    body1 = body2 = layer = None
    gap = None
    if chk.keys(stack_data, KEYS["stack"], ["stack"]):
        if chk.require(stack_data, "body1", ["stack"]):
            body1 = _material(chk, stack_data["body1"], ["stack", "body1"])
        if chk.require(stack_data, "body2", ["stack"]):
            body2 = _material(chk, stack_data["body2"], ["stack", "body2"])
        gap = chk.number(stack_data, "gap_nm", ["stack"], positive=True)

    names = {}
    for key, body in (("Omega1", body1), ("Omega2", body2)):
        if isinstance(body, LorentzParams):
            names[key] = surface_polariton_frequency(body)

    mod = data["modulation"]
    mod_freq = delta_eps = None
    if chk.keys(mod, KEYS["modulation"], ["modulation"]):
        mod_freq = chk.energy(mod, "mod_freq_meV", ["modulation"], names)
        delta_eps = chk.number(mod, "delta_eps", ["modulation"], nonnegative=True)

    if chk.require(stack_data, "layer", ["stack"]):
        ldata = stack_data["layer"]
        path = ["stack", "layer"]
        if chk.keys(ldata, KEYS["layer"], path):
            thickness = chk.number(ldata, "thickness_nm", path, positive=True)
            if ldata.get("kind", "modulated") == "modulated":
                eps_static = chk.number(ldata, "eps_static", path, positive=True)
                if None not in (eps_static, delta_eps, mod_freq):
                    material = chk.attempt(path, ModulatedLayerSpec, eps_static, delta_eps, mod_freq)
                    if material is not None and thickness is not None:
                        layer = Layer(material, thickness)
            elif ldata["kind"] == "constant":
                material = _constant(chk, ldata, path)
                if material is not None and thickness is not None:
                    layer = Layer(material, thickness)
            else:
                chk.error(path + ["kind"], "layer kind must be modulated or constant")

    stack = None
    if None not in (body1, body2, gap, layer):
        stack = LayerStack(body1, (Layer(ConstantPermittivity(1.0), gap), layer), body2)
        for msg in stack_violations(stack):
            chk.error(["stack"], msg)
        if stack.modulation is None:
            chk.error(["stack", "layer"], "the layer must be modulated")

    temperature = chk.number(data, "temperature_K", [], default=300.0, nonnegative=True)
    truncation = chk.number(data, "truncation", [], default=config.TRUNCATION, integer=True)
    if truncation is not None and truncation < 1:
        chk.error(["truncation"], "must be >= 1, got %d" % truncation)

    quad = QuadratureSpec()
    qdata = data.get("quadrature", {})
    if chk.keys(qdata, KEYS["quadrature"], ["quadrature"]):
        window = qdata.get("omega_window_meV", list(quad.omega_window))
        if not (isinstance(window, list) and len(window) == 2):
            chk.error(["quadrature", "omega_window_meV"], "expected [lo, hi]")
            window = list(quad.omega_window)
        else:
            try:
                window = [evaluate_energy(w, names) for w in window]
            except (ValueError, ZeroDivisionError) as err:
                chk.error(["quadrature", "omega_window_meV"], str(err))
                window = list(quad.omega_window)
        quad = chk.attempt(
            ["quadrature"],
            QuadratureSpec,
            chk.number(qdata, "rel_tol", ["quadrature"], default=quad.rel_tol),
            chk.number(qdata, "abs_floor", ["quadrature"], default=quad.abs_floor),
            chk.number(qdata, "max_depth", ["quadrature"], default=quad.max_depth, integer=True),
            chk.number(qdata, "kpar_max_factor", ["quadrature"], default=quad.kpar_max_factor),
            tuple(float(w) for w in window),
        )

    sweeps = {}
    sdata = data.get("sweeps", {})
    if isinstance(sdata, dict):
        for name, spec in sdata.items():
            sweep = _sweep(chk, spec, ["sweeps", name], names)
            if sweep is not None:
                sweeps[name] = sweep
    else:
        chk.error(["sweeps"], "expected an object of named sweeps")

    dispersion = None
    if "dispersion" in data:
        ddata = data["dispersion"]
        if chk.keys(ddata, KEYS["dispersion"], ["dispersion"]) and chk.require(ddata, "kpar_per_nm", ["dispersion"]):
            krange = _range(chk, ddata["kpar_per_nm"], ["dispersion", "kpar_per_nm"])
            if krange is not None:
                if krange.start <= 0:
                    chk.error(["dispersion", "kpar_per_nm"], "wavenumbers must be positive")
                dispersion = DispersionSpec(krange, bool(ddata.get("layered", False)), ddata.get("figure"))

    indicator = None
    if "indicator" in data:
        idata = data["indicator"]
        path = ["indicator"]
        if chk.keys(idata, KEYS["indicator"], path):
            pairs = []
            for i, pdata in enumerate(idata.get("pairs", [])):
                ppath = path + ["pairs", i]
                if not chk.keys(pdata, KEYS["pair"], ppath):
                    continue
                freq = chk.energy(pdata, "mod_freq_meV", ppath, names)
                dw = chk.energy(pdata, "delta_omega_meV", ppath, names, default=0.0)
                if freq is not None:
                    if not 0.5 * freq - dw > 0:
                        chk.error(ppath, "Omega/2 - delta_omega must be positive")
                    pairs.append(PairSpec(str(pdata.get("label", "pair%d" % i)), freq, dw))
            if not pairs:
                chk.error(path, "at least one pair is required")
            z_range = _range(chk, idata.get("z_nm", {}), path + ["z_nm"])
            T_range = _range(chk, idata.get("T_K", {}), path + ["T_K"])
            if z_range is not None and gap is not None and not (0 < z_range.start and z_range.stop < gap):
                chk.error(path + ["z_nm"], "heights must lie strictly inside the gap (0, %g)" % gap)
            if T_range is not None and T_range.start < 0:
                chk.error(path + ["T_K"], "temperatures must be >= 0")
            if pairs and z_range is not None and T_range is not None:
                indicator = IndicatorSpec(tuple(pairs), z_range, T_range, idata.get("figure"))

    if chk.errors:
        raise ConfigError(chk.errors, source)
    return SimulationConfig(
        name=str(data["name"]),
        stack=stack,
        temperature=temperature,
        truncation=truncation,
        quadrature=quad,
        sweeps=sweeps,
        dispersion=dispersion,
        indicator=indicator,
        output_dir=str(data.get("output_dir", config.OUTPUT_DIR)),
        raw=copy.deepcopy(data),
    )


def resolve_path(path_or_name):
    """A config path, or the name of a bundled recipe in data/recipes."""
    if os.path.exists(path_or_name):
        return path_or_name
    candidate = os.path.join(config.RECIPES_DIR, "%s.json" % path_or_name)
    if os.path.exists(candidate):
        return candidate
    raise ConfigError(
        ["no config file or recipe named %r. Did you mean %s ?" % (path_or_name, suggest_recipe(path_or_name))],
        path_or_name,
    )


def load_config(path) -> SimulationConfig:
    path = resolve_path(path)
    with open(path) as fd:
        text = fd.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(["line %d column %d: %s" % (err.lineno, err.colno, err.msg)], path)
    return build_config(data, text=text, source=path)


def dump_config(cfg: SimulationConfig) -> str:
    return json.dumps(cfg.raw, indent=2, sort_keys=False) + "\n"


def with_overrides(cfg: SimulationConfig, **changes) -> SimulationConfig:
    """Rebuild a config with top-level JSON keys replaced (e.g. truncation)."""
    data = copy.deepcopy(cfg.raw)
    data.update(changes)
    return build_config(data)

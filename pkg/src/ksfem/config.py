"""Simulation configuration: a flat ``key = value`` file split into sections.

Example::

    [mesh]
    type = structured
    n = 16
    domain = 0 1 0 1

    [initial]
    u = gaussian
    u.mass = 1
    u.center = 0.5 0.5
    u.width = 0.1
    v = affine
    v.floor = 0.1
    v.gradient = 0.9 0

    [time]
    t_end = 1

Unknown sections or keys are errors.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .scheme import SchemeParams
from .timeloop import StepControl

__all__ = [
    "ConfigError",
    "MeshSpec",
    "Preset",
    "OutputSpec",
    "SimulationConfig",
    "parse_config",
    "parse_config_text",
    "format_config",
    "U_PRESETS",
    "V_PRESETS",
]


class ConfigError(ValueError):
    pass


# preset name -> {parameter: (arity, default or None when required)}
U_PRESETS = {
    "constant": {"value": (1, None)},
    "gaussian": {"center": (2, (0.5, 0.5)), "width": (1, 0.1), "amplitude": (1, None),
                 "mass": (1, None)},
    "two_bump": {"centers": (4, (0.3, 0.3, 0.7, 0.7)), "width": (1, 0.1),
                 "amplitude": (1, None), "mass": (1, None)},
}
V_PRESETS = {
    "constant": {"value": (1, None)},
    "affine": {"floor": (1, None), "gradient": (2, (0.0, 0.0))},
}


@dataclass(frozen=True)
class MeshSpec:
    type: str = "structured"
    n: int = 16
    domain: tuple = (0.0, 1.0, 0.0, 1.0)
    path: str | None = None


@dataclass(frozen=True)
class Preset:
    name: str
    params: dict = field(default_factory=dict)

    def get(self, key):
        return self.params[key]


@dataclass(frozen=True)
class OutputSpec:
    every: float | None = None
    fields_format: str = "csv"
    out_dir: str = "output"


@dataclass(frozen=True)
class SimulationConfig:
    mesh: MeshSpec
    initial_u: Preset
    initial_v: Preset
    scheme: SchemeParams
    time: StepControl
    output: OutputSpec = OutputSpec()

    @property
    def t_end(self) -> float:
        return self.time.t_end


def _floats(text, arity, where):
    parts = text.split()
    if len(parts) != arity:
        raise ConfigError(f"{where}: expected {arity} number(s), got {text!r}")
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{where}: not a number: {text!r}") from None
    return vals[0] if arity == 1 else vals


def _read_sections(text, source):
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{where}: malformed section header {raw.strip()!r}")
            current = line[1:-1].strip()
            if current not in ("mesh", "initial", "scheme", "time", "output"):
                raise ConfigError(f"{where}: unknown section [{current}]")
            if current in sections:
                raise ConfigError(f"{where}: duplicate section [{current}]")
            sections[current] = {}
            continue
        if current is None:
            raise ConfigError(f"{where}: key outside of any section")
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{where}: empty key or value")
        if key in sections[current]:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        sections[current][key] = (value, lineno)
    return sections


def _typed(section, spec, source, name):
    """Convert a section's raw entries using ``spec = {key: converter}``."""
    out = {}
    for key, (value, lineno) in section.items():
        if key not in spec:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r} in [{name}]")
        try:
            out[key] = spec[key](value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad value {value!r} for {key!r}") from None
    return out


def _preset(entries, which, table, source):
    if which not in entries:
        raise ConfigError(f"{source}: [initial] requires '{which} = <preset>'")
    name, lineno = entries[which]
    if name not in table:
        raise ConfigError(
            f"{source}:{lineno}: unknown {which} preset {name!r}; choose from {sorted(table)}"
        )
    params = {}
    # line of the preset name, then of each explicitly given parameter
    lines = {"": lineno}
    prefix = which + "."
    for key, (value, ln) in entries.items():
        if not key.startswith(prefix):
            continue
        pname = key[len(prefix):]
        if pname not in table[name]:
            raise ConfigError(f"{source}:{ln}: preset {name!r} has no parameter {pname!r}")
        params[pname] = _floats(value, table[name][pname][0], f"{source}:{ln}")
        lines[pname] = ln
    for pname, (_, default) in table[name].items():
        if pname not in params and default is not None:
            params[pname] = default
    return Preset(name, params), lines


def _validate_presets(cfg_u, lines_u, cfg_v, lines_v, source):
    def at(lines, key=""):
        return f"{source}:{lines.get(key, lines[''])}"

    p = cfg_u.params
    if cfg_u.name == "constant":
        if "value" not in p:
            raise ConfigError(f"{at(lines_u)}: constant preset needs u.value")
        if p["value"] < 0:
            raise ConfigError(f"{at(lines_u, 'value')}: u0 must be nonnegative, got {p['value']}")
    else:
        if ("amplitude" in p) == ("mass" in p):
            raise ConfigError(f"{at(lines_u)}: give exactly one of u.amplitude, u.mass")
        key = "amplitude" if "amplitude" in p else "mass"
        if p[key] <= 0:
            raise ConfigError(f"{at(lines_u, key)}: bump {key} must be positive")
        if p["width"] <= 0:
            raise ConfigError(f"{at(lines_u, 'width')}: u.width must be positive")
    q = cfg_v.params
    if cfg_v.name == "constant":
        if "value" not in q:
            raise ConfigError(f"{at(lines_v)}: constant preset needs v.value")
        if not q["value"] > 0:
            raise ConfigError(f"{at(lines_v, 'value')}: v0 must be strictly positive, "
                              f"got {q['value']}")
    elif cfg_v.name == "affine":
        if "floor" not in q:
            raise ConfigError(f"{at(lines_v)}: affine preset needs v.floor")
        if not q["floor"] > 0:
            raise ConfigError(f"{at(lines_v, 'floor')}: v.floor must be strictly positive")


def _int(value):
    n = int(value)
    if str(n) != value.strip():
        raise ValueError(value)
    return n


def _domain(value):
    d = _floats(value, 4, "domain")
    if not (d[1] > d[0] and d[3] > d[2]):
        raise ConfigError(f"empty domain {value!r}")
    return d


def parse_config_text(text: str, source: str = "<config>", base_dir=None) -> SimulationConfig:
    sec = _read_sections(text, source)
    for required in ("mesh", "initial", "time"):
        if required not in sec:
            raise ConfigError(f"{source}: missing section [{required}]")

    m = _typed(sec["mesh"], {"type": str, "n": _int, "domain": _domain, "path": str},
               source, "mesh")
    mtype = m.get("type", "structured")
    if mtype == "structured":
        if "path" in m:
            raise ConfigError(f"{source}: 'path' is only valid with type = file")
        if m.get("n", 1) < 1:
            raise ConfigError(f"{source}: mesh n must be >= 1")
    elif mtype == "file":
        if "path" not in m:
            raise ConfigError(f"{source}: type = file requires 'path'")
        if set(m) & {"n", "domain"}:
            raise ConfigError(f"{source}: 'n'/'domain' are only valid with type = structured")
        path = Path(m["path"])
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        if not path.exists():
            raise ConfigError(f"{source}: mesh file {str(path)!r} does not exist")
        m["path"] = str(path)
    else:
        raise ConfigError(f"{source}: mesh type must be 'structured' or 'file', got {mtype!r}")
    mesh = MeshSpec(**m)

    init = sec["initial"]
    for key, (_, lineno) in init.items():
        if key not in ("u", "v") and not key.startswith(("u.", "v.")):
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r} in [initial]")
    u_pre, lines_u = _preset(init, "u", U_PRESETS, source)
    v_pre, lines_v = _preset(init, "v", V_PRESETS, source)
    _validate_presets(u_pre, lines_u, v_pre, lines_v, source)

    s = _typed(sec.get("scheme", {}),
               {f.name: float for f in dataclasses.fields(SchemeParams)}, source, "scheme")
    t_spec = {f.name: float for f in dataclasses.fields(StepControl)}
    t_spec["max_rejects"] = _int
    t = _typed(sec["time"], t_spec, source, "time")
    if "t_end" not in t:
        raise ConfigError(f"{source}: [time] requires t_end")
    o = _typed(sec.get("output", {}), {"every": float, "fields_format": str, "out_dir": str},
               source, "output")
    if o.get("fields_format", "csv") not in ("csv", "vtk"):
        raise ConfigError(f"{source}: fields_format must be csv or vtk")
    if "every" in o and not o["every"] > 0:
        raise ConfigError(f"{source}: output every must be positive")

    try:
        scheme = SchemeParams(**s)
        control = StepControl(**t)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return SimulationConfig(mesh, u_pre, v_pre, scheme, control, OutputSpec(**o))


def parse_config(path) -> SimulationConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config_text(text, str(path), base_dir=path.parent)


def _fmt(v):
    if isinstance(v, tuple):
        return " ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_config(cfg: SimulationConfig) -> str:
    """Serialize a config so that ``parse_config_text`` reproduces it exactly."""
    lines = ["[mesh]", f"type = {cfg.mesh.type}"]
    if cfg.mesh.type == "structured":
        lines += [f"n = {cfg.mesh.n}", f"domain = {_fmt(tuple(cfg.mesh.domain))}"]
    else:
        lines.append(f"path = {cfg.mesh.path}")
    lines += ["", "[initial]"]
    for which, pre in (("u", cfg.initial_u), ("v", cfg.initial_v)):
        lines.append(f"{which} = {pre.name}")
        lines += [f"{which}.{k} = {_fmt(v)}" for k, v in pre.params.items()]
    lines += ["", "[scheme]"]
    lines += [f"{f.name} = {_fmt(getattr(cfg.scheme, f.name))}"
              for f in dataclasses.fields(cfg.scheme)]
    lines += ["", "[time]"]
    lines += [f"{f.name} = {_fmt(getattr(cfg.time, f.name))}"
              for f in dataclasses.fields(cfg.time)]
    lines += ["", "[output]"]
    if cfg.output.every is not None:
        lines.append(f"every = {_fmt(cfg.output.every)}")
    lines += [f"fields_format = {cfg.output.fields_format}", f"out_dir = {cfg.output.out_dir}"]
    return "\n".join(lines) + "\n"

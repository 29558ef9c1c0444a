"""Experiment configuration files.

A config is flat ``key = value`` text under section headers::

    [experiment]
    name = harnack
    seed = 0
    fields = identity; rotating-anisotropy(1 1.3 1)
    sources = zero; constant(-1)

    [grid]
    resolutions = 16 32      # hx = 1/N, strictly increasing N
    kappa = 2

    [tolerances]
    drift = 0.1

    [params]
    R = 0.125

    [output]
    dir = out/harnack

Every error carries the line it refers to.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, HeislabError

SECTIONS = ("experiment", "grid", "tolerances", "params", "output")
EXPERIMENT_KEYS = ("name", "seed", "fields", "sources", "data", "domain")
GRID_KEYS = ("resolutions", "kappa")
OUTPUT_KEYS = ("dir", "stem")


@dataclass
class ExperimentConfig:
    name: str
    seed: int = 0
    fields: tuple = ()
    sources: tuple = ()
    data: str | None = None
    domain: str | None = None
    resolutions: tuple = ()
    kappa: float | None = None
    tolerances: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    out_dir: str = "out"
    stem: str | None = None
    path: str | None = None

    @property
    def hxs(self):
        return tuple(1.0 / r for r in self.resolutions)

    @property
    def output_stem(self) -> str:
        return self.stem or self.name

    def describe(self) -> dict:
        """Resolved settings, as recorded next to the results."""
        return {"name": self.name, "seed": self.seed, "fields": list(self.fields), "sources": list(self.sources),
                "data": self.data, "domain": self.domain, "resolutions": list(self.resolutions),
                "kappa": self.kappa, "tolerances": dict(self.tolerances), "params": dict(self.params)}


def _line_index(text: str) -> dict:
    """(section, key) -> 1-based line number, plus (section, None) for headers."""
    out, section = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.fullmatch(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            out.setdefault((section, None), no)
            continue
        key = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
        out.setdefault((section, key), no)
    return out


def _split_list(value: str, sep=None):
    if sep is None:
        parts = value.replace(",", " ").split()
    else:
        parts = [p.strip() for p in value.split(sep)]
    return [p for p in parts if p]


def _convert(value: str, like, line):
    """Convert text to the type of the default ``like``."""
    try:
        if isinstance(like, bool):
            low = value.strip().lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError(value)
            return low in ("true", "yes", "1")
        if isinstance(like, int):
            return int(value)
        if isinstance(like, float):
            return float(value)
        if isinstance(like, (tuple, list)):
            return tuple(float(v) for v in _split_list(value))
        return value.strip()
    except ValueError:
        raise ConfigError(f"cannot read {value!r} as {type(like).__name__}", line) from None


def parse_config(text: str, path: str | None = None) -> ExperimentConfig:
    """Parse and validate config text against the experiment registry."""
    from .verify.registry import REGISTRY, SOURCE_NAMES, DATA_NAMES, parse_source, parse_data

    lines = _line_index(text)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string(text, source=path or "<config>")
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("content before the first [section] header", exc.lineno) from None
    except configparser.ParsingError as exc:
        no = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"malformed line {exc.errors[0][1]!s}" if exc.errors else str(exc), no) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(exc.message.split(": ", 1)[-1] if hasattr(exc, "message") else str(exc),
                          exc.lineno) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None

    def where(section, key=None):
        return lines.get((section, key), lines.get((section, None)))

    for sec in parser.sections():
        if sec.lower() not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]; expected one of {', '.join(SECTIONS)}", where(sec.lower()))
    if not parser.has_section("experiment"):
        raise ConfigError("missing [experiment] section", 1)
    ex = parser["experiment"]
    for key in ex:
        if key not in EXPERIMENT_KEYS:
            raise ConfigError(f"unknown key {key!r} in [experiment]", where("experiment", key))
    if "name" not in ex:
        raise ConfigError("[experiment] needs a name", where("experiment"))
    name = ex["name"].strip()
    if name not in REGISTRY:
        raise ConfigError(f"unknown experiment {name!r}; valid names: {', '.join(sorted(REGISTRY))}",
                          where("experiment", "name"))
    spec = REGISTRY[name]
    cfg = ExperimentConfig(name=name, path=path, fields=spec.fields, sources=spec.sources, data=spec.data,
                           resolutions=spec.resolutions, kappa=spec.kappa, tolerances=dict(spec.tolerances),
                           params=dict(spec.params))
    if "seed" in ex:
        cfg.seed = _convert(ex["seed"], 0, where("experiment", "seed"))
        if cfg.seed < 0:
            raise ConfigError("seed must be nonnegative", where("experiment", "seed"))
    if "fields" in ex:
        cfg.fields = tuple(_split_list(ex["fields"], ";"))
    if "sources" in ex:
        cfg.sources = tuple(_split_list(ex["sources"], ";"))
    if "data" in ex:
        cfg.data = ex["data"].strip()
    if "domain" in ex:
        cfg.domain = ex["domain"].strip()

    if parser.has_section("grid"):
        grid = parser["grid"]
        for key in grid:
            if key not in GRID_KEYS:
                raise ConfigError(f"unknown key {key!r} in [grid]", where("grid", key))
        if "resolutions" in grid:
            line = where("grid", "resolutions")
            try:
                res = tuple(int(v) for v in _split_list(grid["resolutions"]))
            except ValueError:
                raise ConfigError("resolutions must be integers N (hx = 1/N)", line) from None
            cfg.resolutions = res
        if "kappa" in grid:
            cfg.kappa = _convert(grid["kappa"], 1.0, where("grid", "kappa"))
    if parser.has_section("tolerances"):
        for key, value in parser["tolerances"].items():
            line = where("tolerances", key)
            if key not in spec.tolerances:
                known = ", ".join(sorted(spec.tolerances)) or "none"
                raise ConfigError(f"unknown tolerance {key!r} for {name}; known: {known}", line)
            cfg.tolerances[key] = _convert(value, 1.0, line)
    if parser.has_section("params"):
        lower = {k.lower(): k for k in spec.params}
        for key, value in parser["params"].items():
            line = where("params", key)
            if key not in lower:
                known = ", ".join(sorted(spec.params)) or "none"
                raise ConfigError(f"unknown parameter {key!r} for {name}; known: {known}", line)
            real = lower[key]
            cfg.params[real] = _convert(value, spec.params[real], line)
    if parser.has_section("output"):
        out = parser["output"]
        for key in out:
            if key not in OUTPUT_KEYS:
                raise ConfigError(f"unknown key {key!r} in [output]", where("output", key))
        cfg.out_dir = out.get("dir", cfg.out_dir).strip()
        if "stem" in out:
            cfg.stem = out["stem"].strip()
            if not re.fullmatch(r"[A-Za-z0-9_.-]+", cfg.stem):
                raise ConfigError("output stem may use letters, digits, '_', '-', '.'", where("output", "stem"))

    validate(cfg, lines=lines)
    # the names are checked here so that the message can point at the line
    for text_ in cfg.sources:
        try:
            parse_source(text_)
        except HeislabError as exc:
            raise ConfigError(f"{exc}; valid sources: {', '.join(SOURCE_NAMES)}",
                              where("experiment", "sources")) from None
    if cfg.data is not None:
        try:
            parse_data(cfg.data)
        except HeislabError as exc:
            raise ConfigError(f"{exc}; valid data: {', '.join(DATA_NAMES)}", where("experiment", "data")) from None
    return cfg


def validate(cfg: ExperimentConfig, lines: dict | None = None) -> ExperimentConfig:
    """Invariants: increasing ladder, positive tolerances, fields within their bounds."""
    from . import hcalc
    from .domains import parse_domain

    lines = lines or {}

    def where(section, key=None):
        return lines.get((section, key), lines.get((section, None)))

    res = cfg.resolutions
    if any(r <= 0 for r in res) or any(b <= a for a, b in zip(res, res[1:])):
        raise ConfigError("resolution ladder must be positive and strictly increasing", where("grid", "resolutions"))
    if cfg.kappa is not None and not cfg.kappa > 0:
        raise ConfigError("kappa must be positive", where("grid", "kappa"))
    for key, value in cfg.tolerances.items():
        if not (isinstance(value, (int, float)) and value > 0):
            raise ConfigError(f"tolerance {key!r} must be positive", where("tolerances", key))
    rng = np.random.default_rng(cfg.seed)
    samples = np.column_stack([rng.uniform(-2, 2, (256, 2)), rng.uniform(-4, 4, 256)])
    for text in cfg.fields:
        try:
            A = hcalc.coefficient_from_text(text, 1, cfg.seed)
        except HeislabError as exc:
            raise ConfigError(f"{exc}; valid generators: identity, diagonal(lam Lam), "
                              "rotating-anisotropy(lam Lam freq), diag(a b), random(lam Lam)",
                              where("experiment", "fields")) from None
        if not A.check_bounds(samples):
            raise ConfigError(f"field {text!r} leaves its declared bounds", where("experiment", "fields"))
    if cfg.domain is not None:
        try:
            parse_domain(cfg.domain)
        except HeislabError as exc:
            raise ConfigError(str(exc), where("experiment", "domain")) from None
    return cfg


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}") from None
    return parse_config(text, str(p))


def with_overrides(cfg: ExperimentConfig, seed=None, resolutions=None, out_dir=None) -> ExperimentConfig:
    out = replace(cfg, tolerances=dict(cfg.tolerances), params=dict(cfg.params))
    if seed is not None:
        out.seed = seed
    if resolutions is not None:
        out.resolutions = tuple(resolutions)
    if out_dir is not None:
        out.out_dir = str(out_dir)
    return validate(out)


def _value_text(v) -> str:
    if isinstance(v, (tuple, list)):
        return " ".join(_value_text(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_text(cfg: ExperimentConfig) -> str:
    """Config text that parses back to ``cfg``."""
    out = ["[experiment]", f"name = {cfg.name}", f"seed = {cfg.seed}"]
    if cfg.fields:
        out.append("fields = " + "; ".join(cfg.fields))
    if cfg.sources:
        out.append("sources = " + "; ".join(cfg.sources))
    if cfg.data is not None:
        out.append(f"data = {cfg.data}")
    if cfg.domain is not None:
        out.append(f"domain = {cfg.domain}")
    if cfg.resolutions or cfg.kappa is not None:
        out += ["", "[grid]"]
        if cfg.resolutions:
            out.append("resolutions = " + " ".join(str(r) for r in cfg.resolutions))
        if cfg.kappa is not None:
            out.append(f"kappa = {cfg.kappa!r}")
    for section, values in (("tolerances", cfg.tolerances), ("params", cfg.params)):
        if values:
            out += ["", f"[{section}]"]
            out += [f"{k} = {_value_text(v)}" for k, v in values.items()]
    out += ["", "[output]", f"dir = {cfg.out_dir}"]
    if cfg.stem:
        out.append(f"stem = {cfg.stem}")
    return "\n".join(out) + "\n"

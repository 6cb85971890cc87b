"""INI experiment configuration.

A config file has an ``[experiment]`` section and optional ``[lambda_grid]``,
``[lasso]``, ``[containment]`` and ``[output]`` sections; lists are comma
separated. Unknown keys are rejected so typos do not silently fall back to
defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import fields
from pathlib import Path

from .experiments import ExperimentConfig, LambdaGridSpec


class ConfigError(ValueError):
    pass


_KEYS = {
    "experiment": {"kind", "design", "noise", "a", "n_grid", "p_grid", "s_grid", "reps", "seed", "p_offset",
                   "cell_budget_s"},
    "lambda_grid": {f.name for f in fields(LambdaGridSpec)},
    "lasso": {"grid_count", "grid_ratio"},
    "containment": {"m_grid", "trials", "directions"},
    "output": {"dir"},
}


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace(" ", "").split(",") if t)


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    for sec in cp.sections():
        if sec not in _KEYS:
            raise ConfigError(f"{source}: unknown section [{sec}]")
        extra = set(cp[sec]) - _KEYS[sec]
        if extra:
            raise ConfigError(f"{source}: unknown key(s) in [{sec}]: {', '.join(sorted(extra))}")
    if not cp.has_section("experiment") or "kind" not in cp["experiment"]:
        raise ConfigError(f"{source}: [experiment] must set kind")
    e = cp["experiment"]
    kw = {"experiment": e["kind"].strip()}
    try:
        for key in ("design", "noise"):
            if key in e:
                kw[key] = e[key].strip()
        if "a" in e:
            kw["a"] = float(e["a"])
        for key in ("n_grid", "p_grid", "s_grid"):
            if key in e:
                kw[key] = _ints(e[key])
        for key in ("reps", "seed", "p_offset"):
            if key in e:
                kw[key] = int(e[key])
        if e.get("cell_budget_s", "").strip():
            kw["cell_budget_s"] = float(e["cell_budget_s"])
        if cp.has_section("lambda_grid"):
            g = cp["lambda_grid"]
            kw["lambda_grid"] = LambdaGridSpec(int(g.get("count", 6)), float(g.get("low_mult", 0.1)),
                                               float(g.get("high_mult", 2.0)), float(g.get("exponent", 0.4)))
        if cp.has_section("lasso"):
            s = cp["lasso"]
            if "grid_count" in s:
                kw["lasso_grid_count"] = int(s["grid_count"])
            if "grid_ratio" in s:
                kw["lasso_grid_ratio"] = float(s["grid_ratio"])
        if cp.has_section("containment"):
            c = cp["containment"]
            if "m_grid" in c:
                kw["m_grid"] = _ints(c["m_grid"])
            if "trials" in c:
                kw["trials"] = int(c["trials"])
            if c.get("directions", "").strip():
                kw["directions"] = int(c["directions"])
        if cp.has_section("output") and "dir" in cp["output"]:
            kw["output_dir"] = Path(cp["output"]["dir"].strip())
        return ExperimentConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> tuple[ExperimentConfig, str]:
    """Parse ``path``; returns the config and the raw text (hashed into the run manifest)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path)), text

"""Scenario configuration: TOML (or JSON sidecar) to validated ``ScenarioConfig``."""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import BubbleChainError, ConfigError
from .model import ModelParams, Sector

SCENARIOS = ("fluctuations", "breaking", "resonance-scan", "gatecount", "effective-compare", "full-populations")
PRESETS = ("S_HALF", "S_ONE", "S", "B", "PLUS", "MINUS")
COUPLING_TARGETS = {"par": "g_par2", "perp": "g_perp2", "g_par2": "g_par2", "g_perp2": "g_perp2"}
DIAGONAL_MODES = ("blockwise", "dont_care", "full")


def _grid(section: Any, what: str, scale: float = 1.0) -> list[float]:
    if section is None:
        raise ConfigError(f"missing [{what}] section")
    if isinstance(section, list):
        return [float(v) for v in section]
    if not isinstance(section, dict):
        raise ConfigError(f"[{what}] must be a table or a list")
    if "values" in section:
        vals = [float(v) for v in section["values"]]
    else:
        try:
            start, stop, num = float(section["start"]), float(section["stop"]), int(section["num"])
        except KeyError as exc:
            raise ConfigError(f"[{what}] needs 'values' or start/stop/num (missing {exc})") from None
        if num < 1:
            raise ConfigError(f"[{what}] num must be >= 1")
        vals = np.linspace(start, stop, num).tolist()
    units = section.get("units", "time")
    if units == "xt":
        if scale == 0:
            raise ConfigError(f"[{what}] units='xt' needs nonzero x")
        vals = [v / abs(scale) for v in vals]
    elif units != "time":
        raise ConfigError(f"[{what}] units must be 'time' or 'xt'")
    if any(not math.isfinite(v) for v in vals):
        raise ConfigError(f"[{what}] contains non-finite values")
    return [float(v) for v in vals]


def _weight(value: Any, label: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError:
            pass
    raise ConfigError(f"weight for state {label!r} must be a number, [re, im] or a complex string")


def _model(section: dict) -> ModelParams:
    if not isinstance(section, dict):
        raise ConfigError("missing [model] section")
    sec = dict(section)
    couplings = {}
    aliases = sec.pop("couplings", {}) or {}
    mapping = sec.pop("coupling_map", {}) or {}
    for name, value in aliases.items():
        key = name[2:] if name.startswith("g_") else name
        key = key[:-1] if key.endswith("2") else key
        if key not in mapping:
            raise ConfigError(
                f"coupling {name!r} needs an entry in [model.coupling_map] saying whether '{key}' is 'par' or 'perp'"
            )
        target = COUPLING_TARGETS.get(mapping[key])
        if target is None:
            raise ConfigError(f"coupling_map.{key} must be 'par' or 'perp', got {mapping[key]!r}")
        if target in couplings:
            raise ConfigError(f"two couplings map onto {target}")
        couplings[target] = float(value)
    for key in ("g_par2", "g_perp2"):
        if key in sec:
            if key in couplings:
                raise ConfigError(f"{key} given both directly and through an alias")
            couplings[key] = float(sec.pop(key))
    missing = [k for k in ("g_par2", "g_perp2") if k not in couplings]
    if missing or "x" not in sec:
        raise ConfigError(f"[model] is missing {', '.join(missing + ([] if 'x' in sec else ['x']))}")
    known = {"x", "n_plaquettes", "sector", "simplified"}
    extra = set(sec) - known
    if extra:
        raise ConfigError(f"unknown [model] keys: {sorted(extra)}")
    try:
        return ModelParams(
            x=float(sec["x"]),
            g_par2=couplings["g_par2"],
            g_perp2=couplings["g_perp2"],
            n_plaquettes=int(sec.get("n_plaquettes", 3)),
            sector=Sector.parse(sec.get("sector", "ONE")),
            simplified=sec.get("simplified"),
        )
    except BubbleChainError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class ScenarioConfig:
    scenario: str
    params: ModelParams
    n_steps: int = 2
    initial_preset: str | None = None
    initial_weights: dict[str, complex] = field(default_factory=dict)
    times: list[float] = field(default_factory=list)
    scan_ratios: list[float] = field(default_factory=list)
    shots: int | None = None
    seed: int = 0
    noise_p: float = 0.0
    output_dir: str = "out"
    aggregate: list[list[str]] = field(default_factory=list)
    mirror_aggregate: bool = False
    compiler_mode: str = "blockwise"
    elide: bool = True
    max_angle: float = math.pi / 2
    t_total: float | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> ScenarioConfig:
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a table")
        scenario = raw.get("scenario")
        if scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
        params = _model(raw.get("model"))
        plan = raw.get("plan", {}) or {}
        n_steps = plan.get("n_steps", 2)
        if not isinstance(n_steps, int) or n_steps < 1:
            raise ConfigError("plan.n_steps must be a positive integer")
        t_total = plan.get("t_total")
        cfg = cls(scenario=scenario, params=params, n_steps=n_steps,
                  t_total=float(t_total) if t_total is not None else None)

        init = raw.get("initial_state")
        if isinstance(init, str):
            init = {"preset": init}
        if init is not None:
            if "preset" in init:
                name = str(init["preset"]).upper()
                if name not in PRESETS:
                    raise ConfigError(f"unknown preset {init['preset']!r}; choose from {PRESETS}")
                cfg.initial_preset = name
            elif "states" in init:
                weights = {str(k): _weight(v, k) for k, v in init["states"].items()}
                if not weights or math.isclose(sum(abs(w) ** 2 for w in weights.values()), 0.0):
                    raise ConfigError("explicit initial state has zero norm")
                cfg.initial_weights = weights
            else:
                raise ConfigError("[initial_state] needs 'preset' or 'states'")

        needs_times = scenario != "gatecount" or "time_grid" in raw
        if needs_times:
            cfg.times = _grid(raw.get("time_grid"), "time_grid", params.x)
            if any(t < 0 for t in cfg.times):
                raise ConfigError("time grid must be non-negative")
        if scenario == "resonance-scan":
            cfg.scan_ratios = _grid(raw.get("scan"), "scan")
            if any(r <= 0 for r in cfg.scan_ratios):
                raise ConfigError("scan ratios g_par2/g_perp2 must be positive")

        sampling = raw.get("sampling", {}) or {}
        if "shots" in sampling:
            cfg.shots = int(sampling["shots"])
            if cfg.shots < 1:
                raise ConfigError("sampling.shots must be >= 1")
        cfg.seed = int(raw.get("seed", sampling.get("seed", 0)))
        cfg.noise_p = float(sampling.get("noise_p", raw.get("noise_p", 0.0)))
        if not 0 <= cfg.noise_p <= 1:
            raise ConfigError("noise_p must lie in [0, 1]")

        out = raw.get("output", {}) or {}
        cfg.output_dir = str(raw.get("output_dir", out.get("dir", "out")))
        cfg.aggregate = [[str(s) for s in grp] for grp in out.get("aggregate", [])]
        cfg.mirror_aggregate = bool(out.get("mirror_pairs", False))

        comp = raw.get("compiler", {}) or {}
        cfg.compiler_mode = comp.get("mode", "blockwise")
        if cfg.compiler_mode not in DIAGONAL_MODES:
            raise ConfigError(f"compiler.mode must be one of {DIAGONAL_MODES}")
        cfg.elide = bool(comp.get("elide_partners", True))
        cfg.max_angle = float(comp.get("max_angle", math.pi / 2))
        if cfg.max_angle <= 0:
            raise ConfigError("compiler.max_angle must be positive")
        return cfg

    def to_dict(self) -> dict:
        """Normalized form; feeding it back to ``from_dict`` reproduces this config."""
        p = self.params
        d: dict[str, Any] = {
            "scenario": self.scenario,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "model": {
                "x": p.x, "g_par2": p.g_par2, "g_perp2": p.g_perp2,
                "n_plaquettes": p.n_plaquettes, "sector": p.sector.value, "simplified": p.use_simplified,
            },
            "plan": {"n_steps": self.n_steps},
            "output": {"aggregate": self.aggregate, "mirror_pairs": self.mirror_aggregate},
            "compiler": {"mode": self.compiler_mode, "elide_partners": self.elide, "max_angle": self.max_angle},
            "sampling": {"noise_p": self.noise_p},
        }
        if self.t_total is not None:
            d["plan"]["t_total"] = self.t_total
        if self.initial_preset:
            d["initial_state"] = {"preset": self.initial_preset}
        elif self.initial_weights:
            d["initial_state"] = {"states": {k: [w.real, w.imag] for k, w in self.initial_weights.items()}}
        if self.times:
            d["time_grid"] = {"values": list(self.times)}
        if self.scan_ratios:
            d["scan"] = {"values": list(self.scan_ratios)}
        if self.shots is not None:
            d["sampling"]["shots"] = self.shots
        return d


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix == ".json":
            raw = json.loads(text)
            raw = raw.get("config", raw)
        else:
            raw = tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return ScenarioConfig.from_dict(raw)

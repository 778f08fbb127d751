"""
Run Configuration
Flat key=value files (python-dotenv parser), CLI overrides, manifests
"""

import io
import logging
import os
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple

import psutil
import sympy
from dotenv.parser import parse_stream

from ergolab.errors import ConfigurationError
from ergolab.simulations.dynamics import SkewSystem, SystemConfig

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.cfg"


def default_workers() -> int:
    return psutil.cpu_count(logical=False) or 1


def _to_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _to_eta(raw: str) -> Optional[float]:
    return None if raw.strip() == "full" else float(raw)


def _optional(convert):
    def parse(raw: str):
        return None if raw.strip() in ("", "none", "None") else convert(raw)
    return parse


SYSTEM_KEYS = {
    "p1": str,
    "p2": str,
    "M": _optional(int),
    "horizon": int,
    "f": str,
    "eta": _to_eta,
    "seed": int,
    "samples": int,
    "omega_per_point": int,
    "base": str,
    "rotation_alpha": _optional(str),
    "step_function": _optional(str),
    "unsafe_degree": _to_bool,
    "scan_bound": _optional(int),
    "budget": int,
}

RUN_KEYS = {
    "workers": int,
    "n_from": str,
    "n_to": str,
    "n_values": str,
    "k_cap": int,
    "n_max": str,
    "n_cap": int,
    "growth": str,
    "llt_n": str,
    "entropy_n": str,
    "conjugacy_trials": int,
}

ALL_KEYS = {**SYSTEM_KEYS, **RUN_KEYS}


@dataclass
class RunConfig:
    """A SystemConfig plus the experiment parameters of one invocation"""
    system: SystemConfig = field(default_factory=SystemConfig)
    workers: int = 1
    n_from: str = "M"
    n_to: str = "M+H-1"
    n_values: str = "M,M+10,M+20"
    k_cap: int = 10
    n_max: str = "M+H-1"
    n_cap: int = 100
    growth: str = "poly:n^5"
    llt_n: str = "100,400,1600,6400"
    entropy_n: str = "10000,100000,1000000"
    conjugacy_trials: int = 1000

    def to_dict(self) -> Dict[str, Any]:
        data = self.system.to_dict()
        for f in fields(self):
            if f.name != "system":
                data[f.name] = getattr(self, f.name)
        return data

    def resolve_n(self, system: SkewSystem, expression: str) -> int:
        """Evaluate an n expression such as "M+30" or "M+H-1" for a built system"""
        try:
            value = sympy.sympify(expression, locals={"M": sympy.Integer(system.start),
                                                      "H": sympy.Integer(system.horizon)})
        except (sympy.SympifyError, TypeError) as e:
            raise ConfigurationError(f"cannot evaluate {expression!r}: {e}") from e
        if not value.is_Integer:
            raise ConfigurationError(f"{expression!r} does not evaluate to an integer")
        return int(value)

    def resolve_list(self, system: SkewSystem, expression: str) -> List[int]:
        return [self.resolve_n(system, item) for item in expression.split(",") if item.strip()]


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _position(original, offset: int) -> Tuple[int, int]:
    """1-based (line, column) of a character offset inside a parsed binding"""
    text = original.string
    line = original.line + text.count("\n", 0, offset)
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Tuple[Any, int, int]]:
    """key -> (typed value, line, column of the value); malformed lines and unknown keys raise ConfigurationError"""
    values = {}
    for binding in parse_stream(io.StringIO(text)):
        original = binding.original
        if binding.error:
            stripped = original.string.lstrip()
            line, column = _position(original, len(original.string) - len(stripped))
            raise ConfigurationError("malformed line", source, line, column)
        if binding.key is None:
            continue
        key_offset = original.string.find(binding.key)
        line, column = _position(original, key_offset)
        if binding.key not in ALL_KEYS:
            raise ConfigurationError(f"unknown key {binding.key!r}", source, line, column)
        raw = binding.value if binding.value is not None else ""
        _, value_column = _position(original, original.string.find("=", key_offset) + 1)
        try:
            values[binding.key] = (ALL_KEYS[binding.key](raw), line, value_column)
        except ValueError as e:
            raise ConfigurationError(f"invalid value for {binding.key}: {e}", source, line, value_column) from e
    return values


def load_config_file(path: str) -> Dict[str, Tuple[Any, int, int]]:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ConfigurationError(f"cannot read config file: {e}", path, 1, 1) from e
    return parse_config_text(text, path)


def resolve_config(file_values: Optional[Dict[str, Tuple[Any, int, int]]] = None,
                   overrides: Optional[Dict[str, Any]] = None,
                   source: Optional[str] = None) -> Tuple[RunConfig, SkewSystem]:
    """Merge file values and CLI overrides (CLI wins), validate, and build the system"""
    file_values = file_values or {}
    merged = {key: value for key, (value, _, _) in file_values.items()}
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    system_config = SystemConfig(**{k: v for k, v in merged.items() if k in SYSTEM_KEYS})
    run = RunConfig(system=system_config, **{k: v for k, v in merged.items() if k in RUN_KEYS})
    problems = system_config.validate()
    if problems:
        key = problems[0].split(":", 1)[0].split()[0]
        if key in file_values and key not in (overrides or {}):
            _, line, column = file_values[key]
            raise ConfigurationError(problems[0], source, line, column)
        raise ConfigurationError("; ".join(problems))
    if run.workers < 1:
        raise ConfigurationError("workers must be positive", source)
    system = system_config.build()
    run.system = system.config
    return run, system


def write_manifest(run: RunConfig, out_dir: str) -> str:
    """Fully resolved configuration (M included), sorted keys, in the input format"""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, MANIFEST_NAME)
    lines = [f"{key}={_format(value)}" for key, value in sorted(run.to_dict().items())]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    logger.info("Manifest written to %s", path)
    return path

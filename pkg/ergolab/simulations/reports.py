"""
Experiment Reports
JSON, CSV and two-column .dat emission; wall-clock goes to a separate timing file
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd

from ergolab.models.base_systems import LLT_NOT_GUARANTEED, BaseKind

logger = logging.getLogger(__name__)

TIMING_FILE = "timing.json"


@dataclass
class ExperimentReport:
    """Rows, structural checks and curves produced by one experiment run"""
    experiment: str
    config: Dict[str, Any]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    checks: List[Dict[str, Any]] = field(default_factory=list)
    curves: Dict[str, List[Tuple[float, float]]] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    frames: Dict[str, pd.DataFrame] = field(default_factory=dict)
    wall_clock: float = 0.0

    def add_check(self, name: str, passed: bool, detail: str = ""):
        self.checks.append({"name": name, "passed": bool(passed), "detail": detail})
        if not passed:
            logger.warning("Check failed in %s: %s %s", self.experiment, name, detail)

    def record_base(self, kind: BaseKind):
        """Name the base in the summary; a rotation base also gets an LLT note"""
        self.summary["base"] = kind.describe()
        if not kind.is_walk:
            self.notes.append(f"{kind.describe()}: {LLT_NOT_GUARANTEED}")

    @property
    def passed(self) -> bool:
        return all(check["passed"] for check in self.checks)

    @property
    def failed_checks(self) -> List[str]:
        return [check["name"] for check in self.checks if not check["passed"]]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "summary": self.summary,
            "rows": self.rows,
            "checks": self.checks,
            "notes": self.notes,
            "passed": self.passed,
        }

    def to_frame(self) -> pd.DataFrame:
        flat = []
        for row in self.rows:
            flat.append({k: (json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v)
                         for k, v in row.items()})
        return pd.DataFrame(flat)

    def save(self, out_dir: str) -> List[str]:
        """Write <name>.json, <name>.csv, one .csv per frame and one .dat per curve; returns the paths"""
        os.makedirs(out_dir, exist_ok=True)
        stem = self.experiment.replace("-", "_")
        paths = []
        json_path = os.path.join(out_dir, f"{stem}.json")
        with open(json_path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        paths.append(json_path)
        if self.rows:
            csv_path = os.path.join(out_dir, f"{stem}.csv")
            self.to_frame().to_csv(csv_path, index=False)
            paths.append(csv_path)
        for name, frame in sorted(self.frames.items()):
            frame_path = os.path.join(out_dir, f"{stem}_{name}.csv")
            frame.to_csv(frame_path, index=False)
            paths.append(frame_path)
        for curve, points in sorted(self.curves.items()):
            dat_path = os.path.join(out_dir, f"{stem}_{curve}.dat")
            np.savetxt(dat_path, np.asarray(points, dtype=np.float64).reshape(-1, 2),
                       fmt="%.12g", header=f"{curve}: x y")
            paths.append(dat_path)
        record_timing(out_dir, self.experiment, self.wall_clock)
        logger.info("Report %s written to %s", self.experiment, out_dir)
        return paths


def record_timing(out_dir: str, name: str, seconds: float):
    path = os.path.join(out_dir, TIMING_FILE)
    timings = {}
    if os.path.exists(path):
        try:
            with open(path) as f:
                timings = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.warning("Ignoring unreadable %s: %s", path, e)
    timings[name] = round(seconds, 3)
    with open(path, "w") as f:
        json.dump(timings, f, indent=2, sort_keys=True)

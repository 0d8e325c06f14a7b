import json
import logging
import math
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib.metadata import version
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import scipy

from nambukepler.config import PRNG_ALGORITHM, SCHEMA_VERSION

logger = logging.getLogger(__name__)


def relative_residual(diff_norm: float, scale: float) -> float:
    """
    Normalize an absolute discrepancy by a natural scale.
    A zero discrepancy is always 0; a zero scale leaves the discrepancy absolute.
    """
    if diff_norm == 0.0:
        return 0.0
    if scale <= 0.0:
        return float(diff_norm)
    return float(diff_norm / scale)


def finite_or_none(value):
    """Replace non-finite floats, at any depth of dicts and lists, with None."""
    if isinstance(value, dict):
        return {k: finite_or_none(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [finite_or_none(v) for v in value]
    if isinstance(value, (float, np.floating)) and not math.isfinite(value):
        return None
    return value


@dataclass
class VerificationReport:
    """Named residuals checked against a single tolerance."""

    test_name: str
    tolerance: float
    residuals: Dict[str, float] = field(default_factory=dict)
    seed: Optional[int] = None
    trials: int = 0
    rep: Optional[List[float]] = None
    convention_selected: Optional[str] = None
    notes: Dict[str, object] = field(default_factory=dict)

    def record(self, name: str, value: float):
        # keep the worst value when a name is recorded more than once
        value = float(value)
        previous = self.residuals.get(name)
        if previous is None or not value <= previous:
            self.residuals[name] = value
        logger.debug(f"{self.test_name}: {name} = {value:.3e}")

    @property
    def max_residual(self) -> float:
        if not self.residuals:
            return 0.0
        values = list(self.residuals.values())
        if any(math.isnan(v) for v in values):
            return math.nan
        return max(values)

    @property
    def passed(self) -> bool:
        # NaN compares False, so it fails
        return all(v < self.tolerance for v in self.residuals.values())

    def failures(self) -> List[str]:
        return [name for name, v in self.residuals.items() if not v < self.tolerance]

    def to_dict(self) -> dict:
        max_residual = self.max_residual
        return {
            "test_name": self.test_name,
            "rep": self.rep,
            "seed": self.seed,
            "trials": self.trials,
            "max_residual": max_residual if math.isfinite(max_residual) else None,
            "tolerance": self.tolerance,
            "convention_selected": self.convention_selected,
            "pass": self.passed,
            "residuals": finite_or_none(self.residuals),
            "notes": finite_or_none(self.notes),
        }


def toolchain_metadata() -> dict:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "click": version("click"),
        "platform": platform.platform(),
        "prng": PRNG_ALGORITHM,
    }


def build_payload(reports: List[VerificationReport], command: str, include_toolchain: bool = False) -> dict:
    """
    Assemble the versioned JSON document for a list of reports.
    :param reports: reports in the order they were produced.
    :param command: name of the CLI command that produced them.
    :param include_toolchain: add interpreter and library versions.
    :return: JSON-serializable dictionary.
    """
    payload = {
        "schema": SCHEMA_VERSION,
        "command": command,
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "pass": all(r.passed for r in reports),
        "suites": [r.to_dict() for r in reports],
    }
    if include_toolchain:
        payload["toolchain"] = toolchain_metadata()
    return payload


def dump_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False)


def write_text(text: str, out: str):
    """
    Write an artifact to a path, or to standard output when out is '-'.
    :param text: file contents.
    :param out: destination path or '-'.
    :raises: OSError when the destination cannot be written.
    """
    if out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        sys.stdout.flush()
        return

    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        f.write(text)
    logger.info(f"Wrote {len(text)} bytes to {path}")

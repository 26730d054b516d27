"""Run configuration: tolerances, step budgets, schedules, seeding.

A single :class:`RunConfig` travels through the CLI into every solver call so
that identical inputs and configuration produce byte-identical outputs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict

from .errors import InputError

# Absolute tolerance used for map round trips and point-equality tests.
DEFAULT_TOL = 1e-9

# Default excision schedule for loop/arc energies, as fractions of the loop.
DEFAULT_EPS_SCHEDULE = (0.125, 0.0625, 0.03125, 0.015625)

ENV_CONFIG_VAR = "LOEWNER_LAB_CONFIG"


@dataclass
class RunConfig:
    tolerance: float = DEFAULT_TOL
    steps_per_unit: int = 256
    eps_schedule: tuple[float, ...] = DEFAULT_EPS_SCHEDULE
    seed: int = 0
    output_dir: str = "out"
    # provenance: where each field came from ("default", "config-file", "flag")
    sources: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tolerance <= 0:
            raise InputError("tolerance must be positive")
        if self.steps_per_unit < 1:
            raise InputError("steps_per_unit must be a positive integer")
        sched = tuple(float(e) for e in self.eps_schedule)
        if not sched or any(e <= 0 for e in sched):
            raise InputError("eps_schedule entries must be positive")
        if any(b >= a for a, b in zip(sched, sched[1:])):
            raise InputError("eps_schedule must be strictly decreasing")
        self.eps_schedule = sched

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eps_schedule"] = list(self.eps_schedule)
        return d


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from a JSON file, the environment fallback, and overrides.

    Precedence: explicit flag overrides > config file > LOEWNER_LAB_CONFIG file
    > defaults.  ``sources`` records the origin of every field.
    """
    values: dict = {}
    sources: dict = {}

    file_path = path or os.environ.get(ENV_CONFIG_VAR)
    if file_path:
        try:
            with open(file_path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config file {file_path!r}: {exc}") from exc
        if not isinstance(data, dict):
            raise InputError(f"config file {file_path!r} must hold a JSON object")
        origin = "config-file" if path else "env-config"
        for key, val in data.items():
            values[key] = val
            sources[key] = origin

    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
            sources[key] = "flag"

    known = {"tolerance", "steps_per_unit", "eps_schedule", "seed", "output_dir"}
    unknown = set(values) - known
    if unknown:
        raise InputError(f"unknown config fields: {sorted(unknown)}")
    for key in known - set(sources):
        sources[key] = "default"

    if "eps_schedule" in values:
        values["eps_schedule"] = tuple(values["eps_schedule"])
    return RunConfig(sources=sources, **values)

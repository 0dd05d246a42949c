"""Python front end for the chaos BSDE solver.

Configs are plain dicts using the same keys as the command-line JSON files.
"""

import json

from . import _core
from ._core import (
    ConfigError,
    bs_call_delta,
    bs_call_price,
    hermite,
    hermite_all,
    index_count,
    multi_indices,
    normal_cdf,
    problem_ids,
)

__all__ = [
    "ConfigError",
    "bs_call_delta",
    "bs_call_price",
    "config",
    "hermite",
    "hermite_all",
    "index_count",
    "multi_indices",
    "normal_cdf",
    "oracle",
    "paths",
    "problem_ids",
    "repeat",
    "run",
    "solve",
    "sweep",
]


def _text(cfg, overrides):
    merged = dict(cfg or {})
    merged.update(overrides)
    return json.dumps(merged)


def config(cfg=None, **overrides):
    """Validated config with every default filled in."""
    return json.loads(_core.normalize_config(_text(cfg, overrides)))


def solve(cfg=None, **overrides):
    """Single scheme run; returns y0, z0, per-step diagnostics and, with
    retain=True, the coefficient vectors of every step."""
    return _core.solve(_text(cfg, overrides))


def run(cfg=None, **overrides):
    return _core.rows(_text(cfg, overrides), "run")[0]


def repeat(cfg=None, **overrides):
    return _core.rows(_text(cfg, overrides), "repeat")


def sweep(cfg=None, **overrides):
    return _core.rows(_text(cfg, overrides), "sweep")


def paths(cfg=None, **overrides):
    """(column names, array) of Y/Z along fresh paths; Euler only."""
    return _core.paths(_text(cfg, overrides))


def oracle(cfg=None, **overrides):
    """Direct Monte Carlo baselines: y0 and z0 as (value, stderr) pairs."""
    return _core.oracle(_text(cfg, overrides))

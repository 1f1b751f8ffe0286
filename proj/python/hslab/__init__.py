"""Python front end for the hslab solver and its verification checks."""

import json

from ._hslab import (
    Config,
    Field,
    Grid,
    WeightModel,
    check_growth_bound,
    check_muckenhoupt,
    identity_a3,
    load_config,
    make_grid,
    named_field,
    parse_config,
    read_dump,
    relaxed_stability,
    solve,
    symmetry_detect,
    write_dump,
)
from ._hslab import run as _run

__all__ = [
    "Config",
    "Field",
    "Grid",
    "WeightModel",
    "check_growth_bound",
    "check_muckenhoupt",
    "identity_a3",
    "load_config",
    "make_grid",
    "named_field",
    "parse_config",
    "read_dump",
    "relaxed_stability",
    "run",
    "solve",
    "symmetry_detect",
    "write_dump",
]


def run(subcommand, config, out_dir, seed=0):
    """Run a subcommand; returns (exit_code, list of report dicts)."""
    code, reports = _run(subcommand, config, str(out_dir), seed)
    return code, [json.loads(r) for r in reports]

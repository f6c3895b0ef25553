"""Conditional and marginal treatment-effect estimands from a known outcome model."""

import json as _json
from pathlib import Path as _Path

from . import _core
from ._core import NumericalError, ValidationError, collapsibility, config_hash, link_forward, link_inverse

__all__ = [
    "NumericalError",
    "ValidationError",
    "collapsibility",
    "config_hash",
    "link_forward",
    "link_inverse",
    "run",
    "figure",
    "main",
]


def run(verb, config, base_dir="."):
    """Run an analysis and return the JSON report as a dict.

    `config` is a path to a JSON/CSV config or a dict in the config schema.
    """
    if isinstance(config, dict):
        text = _core.run_json(verb, _json.dumps(config), str(base_dir))
    else:
        text = _core.run_file(verb, str(_Path(config)))
    return _json.loads(text)


def figure(figure_id, config, base_dir="."):
    """CSV text of the curve data behind one figure."""
    if isinstance(config, dict):
        return _core.run_json("figure", _json.dumps(config), str(base_dir), figure_id, "csv")
    return _core.run_file("figure", str(_Path(config)), figure_id, "csv")


def main(args):
    """CLI entry point; returns (exit_code, stdout, stderr)."""
    return _core.main(list(args))

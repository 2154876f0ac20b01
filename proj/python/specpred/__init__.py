"""Python bindings for the specpred core.

Documents (descriptors, certificates, scenarios, reports) are plain dicts with
the same layout as the CLI's JSON files.
"""

import json
import os

from . import _core

__all__ = [
    "certify",
    "simulate",
    "check",
    "sweep",
    "validate_lemma2",
    "fading_memory_sup",
    "lagged_fading_sup",
    "delta_margin",
    "small_gain_lhs",
    "run",
    "load",
]

fading_memory_sup = _core.fading_memory_sup
lagged_fading_sup = _core.lagged_fading_sup
delta_margin = _core.delta_margin
small_gain_lhs = _core.small_gain_lhs


def _text(doc):
    if doc is None:
        return ""
    return doc if isinstance(doc, str) else json.dumps(doc)


def load(path):
    """Read a JSON document."""
    with open(path) as f:
        return json.load(f)


def certify(descriptor=None, fit=True, seed=1, jobs=1):
    """Certificate dict; the default descriptor is reaction-diffusion with c = 15."""
    return json.loads(_core.certify(_text(descriptor), fit, seed, jobs))


def simulate(scenario, base_dir="", oracle=False):
    """Trajectory as a dict of arrays: t, c, Y, Z, u, v, norm_lower, norm_upper."""
    return _core.simulate(_text(scenario), os.fspath(base_dir), oracle)


def check(scenario, base_dir=""):
    return json.loads(_core.check(_text(scenario), os.fspath(base_dir)))


def sweep(scenario, axes, jobs=1, base_dir=""):
    """Summary CSV text, one row per grid point."""
    return _core.sweep(_text(scenario), list(axes), jobs, os.fspath(base_dir))


def validate_lemma2(problem=None, members=50, seed=1, jobs=1, falsify_eps=None):
    return json.loads(_core.validate_lemma2(_text(problem), members, seed, jobs, falsify_eps))


def run(config):
    """Run a CLI subcommand from a config dict; returns (status, output, log)."""
    return _core.run(_text(config))

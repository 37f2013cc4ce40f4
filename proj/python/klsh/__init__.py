"""Python interface to the klsh hashing library."""

import json

from . import _core
from ._core import KlshError, ValidationError, entropy, mutual_information, set_threads

__all__ = [
    "KlshError",
    "ValidationError",
    "entropy",
    "mutual_information",
    "kernel",
    "synth",
    "fit",
    "transform",
    "run_cli",
    "set_threads",
]


def _records(points):
    return [p if isinstance(p, str) else json.dumps(p) for p in points]


def kernel(a, b, **config):
    """Similarity between two vectors or two token lists."""
    return _core.kernel(a, b, json.dumps(config))


def synth(**config):
    """Generate a synthetic dataset; returns a list of record dicts."""
    return [json.loads(line) for line in _core.synth(json.dumps(config))]


def fit(points, config=None, pseudo_test_fraction=0.0):
    """Learn a hash ensemble.

    Returns a dict with the serialized model, one bit string per input point,
    the truncation flag and any ids re-marked as pseudo-test.
    """
    return _core.fit(_records(points), json.dumps(config or {}), pseudo_test_fraction)


def transform(model, points):
    """Hash points with a serialized model."""
    return _core.transform(model, _records(points))


def run_cli(*args):
    """Run the command-line tool in-process; returns (exit_code, diagnostics)."""
    return _core.run_cli([str(a) for a in args])

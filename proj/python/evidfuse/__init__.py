"""Uncertainty-aware multi-view evidential fusion.

Thin wrappers around the compiled extension so synthetic specs and train
configs can be passed as plain dicts.
"""

import json as _json

try:
    from ._evidfuse import *  # noqa: F401,F403  (installed layout)
    from . import _evidfuse as _ext
except ImportError:  # development layout: extension on PYTHONPATH
    from _evidfuse import *  # noqa: F401,F403
    import _evidfuse as _ext

__version__ = _ext.__version__


def generate(spec):
    """Generate a synthetic multi-view dataset.

    Returns (views, labels) with views shaped (num_views, samples, features).
    """
    return _ext._generate_json(_json.dumps(spec))


def bayes_accuracy(spec, views=None):
    """Bayes-optimal accuracy of a view subset (all views by default)."""
    return _ext._bayes_accuracy_json(_json.dumps(spec), list(views or []))


def train_synthetic(spec, config):
    """Generate, train through Dempster fusion, and evaluate on a held-out
    split. Returns a dict of test metrics."""
    return _json.loads(_ext._train_synthetic_json(_json.dumps(spec), _json.dumps(config)))

"""Python bindings for the yueasr toolkit."""

import json as _json

from ._yueasr import *  # noqa: F401,F403
from ._yueasr import __version__, classify_errors as _classify, run_experiment as _run


def classify_errors(refs, a, b):
    """Two-system sentence error classification as a dict."""
    return _json.loads(_classify(refs, a, b))


def run_experiment(config, seed=None, utterances=None):
    """Paired IF/ONC simulation; returns the parsed report."""
    return _json.loads(_run(str(config), seed, utterances))

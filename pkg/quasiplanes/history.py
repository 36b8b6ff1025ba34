__description__ = \
"""
Decorator that records every tracked project call in history.json.
"""
__author__ = "quasiplanes developers"
__date__ = "2026-10-16"

import json
import os
from functools import wraps

from .tools.records import plain


def _describe(value):
    """JSON-safe stand-in for an argument; objects become their type name."""
    value = plain(value)
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, list):
        return [_describe(v) for v in value]
    if isinstance(value, dict):
        return {k: _describe(v) for k, v in value.items()}
    return "<{}>".format(type(value).__name__)


def track_in_history(method):
    """
    Track calculations in a history json in the project's output directory.
    Entries hold the method name, its arguments and the config hash; no
    timestamps, so reruns write identical files.
    """
    @wraps(method)
    def wrapper(self, *args, **kwargs):

        # Run the method
        output = method(self, *args, **kwargs)

        # Create a history item
        history = {"method": method.__name__,
                   "args": _describe(list(args)),
                   "kwargs": _describe(kwargs),
                   "config_hash": self.config_hash}

        # Append to main history list
        self.history.append(history)

        # Write history to a json file.
        history_file = os.path.join(self.out_dir, "history.json")
        with open(history_file, "w") as f:
            json.dump(self.history, f, sort_keys=True, indent=2)
            f.write("\n")

        return output
    return wrapper

"""Named tolerances and check sizes for the verification layer.

The packaged data/tolerances.json holds the defaults; a user file given to
load() overrides keys selectively (the sizes table merges key by key).
Attribute access keeps check code readable: tol.clt_var_rel, tol.sizes.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Optional


class Tolerances:
    """Immutable-ish bag of named tolerances with attribute access."""

    def __init__(self, values: dict):
        self._values = dict(values)

    def __getattr__(self, name):
        try:
            return self._values[name]
        except KeyError:
            raise AttributeError(f"no tolerance named {name!r}") from None

    def __getitem__(self, name):
        return self._values[name]

    def to_dict(self) -> dict:
        out = dict(self._values)
        out["sizes"] = dict(out["sizes"])
        return out

    def __repr__(self):
        return f"Tolerances({self._values!r})"


def _defaults() -> dict:
    text = resources.files("erwalk").joinpath("data/tolerances.json").read_text()
    return json.loads(text)


def load(path: Optional[str] = None) -> Tolerances:
    """Default tolerances, with selective overrides from a JSON file."""
    values = _defaults()
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
        unknown = set(user) - set(values)
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        sizes = user.pop("sizes", None)
        values.update(user)
        if sizes:
            unknown = set(sizes) - set(values["sizes"])
            if unknown:
                raise ValueError(f"unknown size keys: {sorted(unknown)}")
            values["sizes"].update(sizes)
    return Tolerances(values)

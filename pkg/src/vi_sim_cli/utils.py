"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0
"""

import contextlib
import math
import os
import tempfile

from collections import namedtuple

import click

from .config import ensure_dir_exists

OutputSettings = namedtuple("OutputSettings", "table_format missingval")

OutputSettings.__new__.__defaults__ = ("psql", "-")

GRID_TOL = 1e-9


def parse_grid(text):
    """Parse "a:b:step" (both ends inclusive when step divides the span) or a single number.

    :return: tuple of floats rounded to 10 decimals so 0.1 * 3 prints as 0.3
    """
    parts = text.split(":")
    if len(parts) == 1:
        return (float(parts[0]),)
    if len(parts) != 3:
        raise ValueError("expected a number or start:stop:step, got %r" % text)
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError("grid %r needs step > 0 and stop >= start" % text)
    count = int(math.floor((stop - start) / step + GRID_TOL))
    values = [start + k * step for k in range(count + 1)]
    if abs(start + (count + 1) * step - stop) <= GRID_TOL:
        values.append(stop)
    return tuple(round(v, 10) for v in values)


class GridParamType(click.ParamType):
    """click parameter for correlation grids; every value must lie in [0, 1)."""

    name = "grid"

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            grid = parse_grid(value)
        except ValueError as e:
            self.fail(str(e), param, ctx)
        bad = [rho for rho in grid if not 0.0 <= rho < 1.0]
        if bad:
            self.fail("correlations must lie in [0, 1), got %s" % ", ".join(repr(b) for b in bad), param, ctx)
        return grid


class CsvListParamType(click.ParamType):
    """click parameter for comma separated choices, e.g. --methods lm,perm-rf."""

    name = "list"

    def __init__(self, choices):
        self.choices = tuple(choices)

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        items = tuple(item.strip() for item in value.split(",") if item.strip())
        if not items:
            self.fail("at least one value is required", param, ctx)
        invalid = [item for item in items if item not in self.choices]
        if invalid:
            self.fail(
                "invalid value(s) %s, expected any of %s" % (", ".join(invalid), ", ".join(self.choices)), param, ctx
            )
        return items


RHO_GRID = GridParamType()


def optional_int(value, none_words=("auto", "none")):
    """Config helper: "auto"/"none" map to None, anything else to int."""
    if value is None or str(value).strip().lower() in none_words:
        return None
    return int(value)


@contextlib.contextmanager
def atomic_output(path):
    """Yield a text file that replaces path only if the block completes without error."""
    ensure_dir_exists(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(prefix=".%s." % os.path.basename(path), dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            yield f
        os.replace(tmp_path, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.remove(tmp_path)
        raise

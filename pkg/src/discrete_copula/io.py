"""CSV and JSON reading/writing for marginals, joints, copulas and return panels."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import TextIO

import numpy as np

from .checkerboard import CheckerboardCopula
from .joint import DiscreteJoint
from .marginals import DiscreteMarginal


def fmt(x: float) -> str:
    """17 significant digits: enough to round-trip any double exactly."""
    return format(float(x), ".17g")


def _rows(source) -> list[list[str]]:
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    return [r for r in csv.reader(source) if r and not r[0].lstrip().startswith("#")]


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_columns(source) -> np.ndarray:
    """Numeric CSV (optional header row, ``#`` comments skipped) as an ``(n, d)`` array."""
    rows = _rows(source)
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise ValueError("no data")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged rows")
    try:
        x = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ValueError(f"non-numeric entry: {exc}") from None
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite sample")
    return x


def write_marginal_csv(m: DiscreteMarginal, out: TextIO) -> None:
    out.write("support,mass\n")
    for x, p in zip(m.support, m.masses):
        out.write(f"{fmt(x)},{fmt(p)}\n")


def read_marginal_csv(source) -> DiscreteMarginal:
    x = read_columns(source)
    if x.shape[1] != 2:
        raise ValueError("marginal CSV needs two columns: support, mass")
    return DiscreteMarginal(x[:, 0], x[:, 1])


def marginal_to_csv_text(m: DiscreteMarginal) -> str:
    buf = io.StringIO()
    write_marginal_csv(m, buf)
    return buf.getvalue()


def joint_to_dict(j: DiscreteJoint) -> dict:
    """``{"axes": [...], "pmf": [[k_1, ..., k_d, mass], ...]}`` with 0-based axis indices."""
    d = {
        "type": "joint",
        "axes": [a.tolist() for a in j.axes],
        "pmf": [[*map(int, k), float(p)] for k, p in zip(j.index, j.mass)],
    }
    if j.n_samples is not None:
        d["n_samples"] = int(j.n_samples)
    return d


def joint_from_dict(d: dict) -> DiscreteJoint:
    try:
        axes = [np.asarray(a, dtype=float) for a in d["axes"]]
        pmf = np.asarray(d["pmf"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed joint JSON: {exc}") from None
    dims = len(axes)
    if pmf.ndim != 2 or pmf.shape[1] != dims + 1:
        raise ValueError("pmf entries must hold one index per axis plus a mass")
    return DiscreteJoint(tuple(axes), pmf[:, :dims].astype(np.int64), pmf[:, dims], d.get("n_samples"))


def copula_to_dict(c: CheckerboardCopula) -> dict:
    return {
        "type": "checkerboard",
        "breakpoints": [b.tolist() for b in c.breakpoints],
        "cells": [[*map(int, k), float(p)] for k, p in zip(c.index, c.mass)],
    }


def copula_from_dict(d: dict) -> CheckerboardCopula:
    try:
        bps = [np.asarray(b, dtype=float) for b in d["breakpoints"]]
        cells = np.asarray(d["cells"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed copula JSON: {exc}") from None
    dims = len(bps)
    if cells.ndim != 2 or cells.shape[1] != dims + 1:
        raise ValueError("cell entries must hold one index per axis plus a mass")
    return CheckerboardCopula(tuple(bps), cells[:, :dims].astype(np.int64), cells[:, dims])


def load_json(path) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"invalid JSON in {path}: {exc}") from None


def read_returns(source) -> tuple[list[str], np.ndarray, np.ndarray]:
    """``date, index_return, asset_1..asset_k`` CSV as ``(dates, index_returns, returns (days, k))``."""
    rows = _rows(source)
    if rows and not all(_is_number(c) for c in rows[0][1:]):
        rows = rows[1:]
    if not rows:
        raise ValueError("no data")
    if any(len(r) != len(rows[0]) for r in rows) or len(rows[0]) < 3:
        raise ValueError("returns CSV needs date, index_return and at least one asset column")
    dates = [r[0].strip() for r in rows]
    try:
        vals = np.array([[float(c) for c in r[1:]] for r in rows])
    except ValueError as exc:
        raise ValueError(f"non-numeric entry: {exc}") from None
    if not np.all(np.isfinite(vals)):
        raise ValueError("non-finite return")
    return dates, vals[:, 0], vals[:, 1:]

"""Input validation and coercion helpers."""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .data import AttributeSpec, DataError, Dataset

_FRACTION_RE = re.compile(r"^\s*(\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_fraction(text: str | Fraction | int) -> Fraction:
    """Parse ``"num/den"`` (or a bare integer) exactly. Decimals are rejected."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise DataError(f"expected a fraction written num/den, got {text!r}")
    m = _FRACTION_RE.match(text)
    if not m:
        raise DataError(f"expected a fraction written num/den, got {text!r}")
    num, den = int(m.group(1)), int(m.group(2) or 1)
    if den == 0:
        raise DataError(f"zero denominator in {text!r}")
    return Fraction(num, den)


def check_unit_fraction(value: Any, name: str = "fraction", *, open_interval: bool = False) -> Fraction:
    f = parse_fraction(value)
    if open_interval and not 0 < f < 1:
        raise DataError(f"{name} must lie strictly between 0 and 1, got {f}")
    if not 0 <= f <= 1:
        raise DataError(f"{name} must lie in [0, 1], got {f}")
    return f


def check_dataset(X: Any, y: Any = None, schema: Sequence[AttributeSpec] | None = None,
                  require_labels: bool = False) -> Dataset:
    """Coerce ``X`` (Dataset, DataFrame or 2-D array-like of tokens) and ``y`` into a Dataset.

    Without a schema, column names come from a DataFrame (else ``x0, x1, ...``)
    and domains are inferred in first-appearance order.
    """
    if isinstance(X, Dataset):
        d = X
        if schema is not None and tuple(schema) != d.schema:
            d = Dataset(tuple(schema), d.rows, d.labels)
    else:
        names = None
        if hasattr(X, "columns") and hasattr(X, "to_numpy"):
            names = [str(c) for c in X.columns]
            X = X.to_numpy()
        arr = np.asarray(X, dtype=object)
        if arr.ndim != 2:
            raise DataError(f"expected a 2-D array of tokens, got shape {arr.shape}")
        rows = tuple(tuple(str(v) for v in r) for r in arr)
        if schema is None:
            names = names or [f"x{i}" for i in range(arr.shape[1])]
            specs = []
            for i, name in enumerate(names):
                seen = list(dict.fromkeys(r[i] for r in rows))
                if len(seen) < 2:
                    seen.append(f"not_{seen[0]}" if seen else "a")
                    if len(seen) < 2:
                        seen.append("b")
                specs.append(AttributeSpec(name, tuple(seen)))
            schema = specs
        d = Dataset(tuple(schema), rows)
    if y is not None:
        labels = np.asarray(y).ravel()
        d = d.with_labels(int(v) for v in labels)
    if require_labels and d.labels is None:
        raise DataError("labels are required")
    return d


def check_rows(X: Any, schema: Sequence[AttributeSpec]) -> list[tuple[str, ...]]:
    """Rows for prediction; every token must lie in the schema's domains."""
    if isinstance(X, Dataset):
        if [a.name for a in X.schema] != [a.name for a in schema]:
            raise DataError("dataset columns do not match the fitted schema")
        return list(X.rows)
    if hasattr(X, "columns") and hasattr(X, "to_numpy"):
        cols = [str(c) for c in X.columns]
        if cols != [a.name for a in schema]:
            raise DataError(f"columns {cols} do not match the fitted schema")
        X = X.to_numpy()
    arr = np.asarray(X, dtype=object)
    if arr.ndim != 2 or arr.shape[1] != len(schema):
        raise DataError(f"expected shape (n, {len(schema)}), got {arr.shape}")
    rows = [tuple(str(v) for v in r) for r in arr]
    for r in rows:
        for attr, token in zip(schema, r):
            attr.index(token)
    return rows

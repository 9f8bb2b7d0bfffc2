"""Categorical dataset model, CSV/schema I/O and exact-independence synthesis.

All proportions are :class:`fractions.Fraction` values computed from integer
counts. Floats never take part in a comparison.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

LABEL_COLUMN = "label"
POSITIVE = 1
NEGATIVE = 0


class DataError(ValueError):
    """Raised for malformed datasets, schemas and synthesis requests."""


@dataclass(frozen=True)
class AttributeSpec:
    """A categorical attribute with a finite, ordered value domain.

    ``favorable`` is the set of values that a conjunctive black box requires
    for a positive decision. ``question`` is an optional human readable
    decision question used when rendering trees.
    """

    name: str
    domain: tuple[str, ...]
    favorable: frozenset[str] = frozenset()
    ordered: bool = False
    sensitive: bool = False
    question: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(str(v) for v in self.domain))
        object.__setattr__(self, "favorable", frozenset(str(v) for v in self.favorable))
        if not self.name:
            raise DataError("attribute name must be nonempty")
        if len(self.domain) < 2:
            raise DataError(f"attribute {self.name!r} needs at least two values")
        if any(v == "" for v in self.domain):
            raise DataError(f"attribute {self.name!r} has an empty value token")
        if len(set(self.domain)) != len(self.domain):
            raise DataError(f"attribute {self.name!r} has duplicate values")
        extra = self.favorable - set(self.domain)
        if extra:
            raise DataError(
                f"favorable values {sorted(extra)} not in domain of {self.name!r}")

    @property
    def favorable_values(self) -> tuple[str, ...]:
        """Favorable values in domain order."""
        return tuple(v for v in self.domain if v in self.favorable)

    @property
    def unfavorable_values(self) -> tuple[str, ...]:
        return tuple(v for v in self.domain if v not in self.favorable)

    def index(self, value: str) -> int:
        try:
            return self.domain.index(value)
        except ValueError:
            raise DataError(f"{value!r} is not in the domain of {self.name!r}") from None

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "domain": list(self.domain),
            "favorable": list(self.favorable_values),
            "ordered": self.ordered,
            "sensitive": self.sensitive,
        }
        if self.question is not None:
            out["question"] = self.question
        return out

    @classmethod
    def from_dict(cls, obj: Mapping) -> "AttributeSpec":
        return cls(
            name=obj["name"],
            domain=tuple(obj["domain"]),
            favorable=frozenset(obj.get("favorable", ())),
            ordered=bool(obj.get("ordered", False)),
            sensitive=bool(obj.get("sensitive", False)),
            question=obj.get("question"),
        )


Schema = tuple[AttributeSpec, ...]


def schema_index(schema: Sequence[AttributeSpec], name: str) -> int:
    for i, attr in enumerate(schema):
        if attr.name == name:
            return i
    raise DataError(f"unknown attribute {name!r}")


@dataclass(frozen=True)
class Dataset:
    """Rows of categorical tokens with optional binary labels (1 / 0)."""

    schema: Schema
    rows: tuple[tuple[str, ...], ...]
    labels: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        names = [a.name for a in self.schema]
        if len(set(names)) != len(names):
            raise DataError("duplicate attribute names in schema")
        if LABEL_COLUMN in names:
            raise DataError(f"{LABEL_COLUMN!r} is reserved for the label column")
        width = len(self.schema)
        domains = [set(a.domain) for a in self.schema]
        for j, row in enumerate(self.rows):
            if len(row) != width:
                raise DataError(f"row {j} has {len(row)} values, expected {width}")
            for attr, dom, token in zip(self.schema, domains, row):
                if token not in dom:
                    raise DataError(
                        f"row {j}: {token!r} is not in the domain of {attr.name!r}")
        if self.labels is not None:
            labels = tuple(int(y) for y in self.labels)
            if len(labels) != len(self.rows):
                raise DataError(
                    f"{len(labels)} labels for {len(self.rows)} rows")
            if any(y not in (POSITIVE, NEGATIVE) for y in labels):
                raise DataError("labels must be 1 or 0")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.schema)

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    def attribute(self, name: str) -> AttributeSpec:
        return self.schema[schema_index(self.schema, name)]

    @cached_property
    def codes(self) -> np.ndarray:
        """Domain indices of every token, shape ``(n, n_attributes)``."""
        lookups = [{v: i for i, v in enumerate(a.domain)} for a in self.schema]
        out = np.empty((len(self.rows), len(self.schema)), dtype=np.int64)
        for j, row in enumerate(self.rows):
            out[j] = [lk[t] for lk, t in zip(lookups, row)]
        return out

    @cached_property
    def label_array(self) -> np.ndarray:
        if self.labels is None:
            raise DataError("dataset is unlabeled")
        return np.asarray(self.labels, dtype=np.int64)

    def with_labels(self, labels: Iterable[int] | None) -> "Dataset":
        return Dataset(self.schema, self.rows, None if labels is None else tuple(labels))

    def with_schema(self, schema: Sequence[AttributeSpec]) -> "Dataset":
        """Re-attach the same tokens to an updated schema (e.g. new favorable sets)."""
        return Dataset(tuple(schema), self.rows, self.labels)

    def subset(self, indices: Iterable[int]) -> "Dataset":
        idx = list(indices)
        labels = None if self.labels is None else tuple(self.labels[i] for i in idx)
        return Dataset(self.schema, tuple(self.rows[i] for i in idx), labels)

    def records(self) -> list[dict[str, str]]:
        names = self.names
        return [dict(zip(names, row)) for row in self.rows]


@dataclass(frozen=True)
class SynthesisSpec:
    """Target favorable fractions per attribute and a dataset size.

    ``n`` must be a multiple of the product of all target denominators, so
    every cell of the factorized joint distribution has an integer count.
    """

    targets: Mapping[str, Fraction]
    n: int

    def __post_init__(self):
        targets = {k: Fraction(v) for k, v in self.targets.items()}
        object.__setattr__(self, "targets", targets)
        if not isinstance(self.n, int) or self.n < 1:
            raise DataError("dataset size n must be a positive integer")
        for name, frac in targets.items():
            if not 0 <= frac <= 1:
                raise DataError(f"fraction for {name!r} outside [0, 1]: {frac}")
        den = math.prod(f.denominator for f in targets.values())
        if self.n % den:
            offenders = [f"{k}={v}" for k, v in targets.items() if v.denominator > 1]
            raise DataError(
                f"n={self.n} is not divisible by {den}, the product of the "
                f"target denominators ({', '.join(offenders)})")


def fraction_favorable(d: Dataset, attr: str) -> Fraction:
    """Exact share of rows whose value of ``attr`` is favorable."""
    spec = d.attribute(attr)
    if not spec.favorable:
        raise DataError(f"attribute {attr!r} has no favorable values")
    if len(d) == 0:
        raise DataError("empty dataset")
    col = d.codes[:, schema_index(d.schema, attr)]
    fav = [spec.index(v) for v in spec.favorable_values]
    return Fraction(int(np.isin(col, fav).sum()), len(d))


def synthesize_from_marginals(
    schema: Sequence[AttributeSpec],
    marginals: Mapping[str, Mapping[str, Fraction]],
    n: int,
) -> Dataset:
    """Build an unlabeled dataset whose joint distribution is the exact product
    of the given per-attribute value distributions.

    Cells are emitted in ``itertools.product`` order over the listed values, so
    the output is fully deterministic.
    """
    schema = tuple(schema)
    if n < 1:
        raise DataError("dataset size n must be positive")
    per_attr = []
    for attr in schema:
        if attr.name not in marginals:
            raise DataError(f"no distribution given for attribute {attr.name!r}")
        dist = {str(k): Fraction(v) for k, v in marginals[attr.name].items()}
        for value, prob in dist.items():
            attr.index(value)
            if not 0 <= prob <= 1:
                raise DataError(f"probability outside [0, 1] for {attr.name}={value}")
        if sum(dist.values()) != 1:
            raise DataError(f"distribution of {attr.name!r} does not sum to 1")
        per_attr.append([(v, p) for v, p in dist.items() if p > 0])
    unknown = set(marginals) - {a.name for a in schema}
    if unknown:
        raise DataError(f"unknown attributes in distribution: {sorted(unknown)}")

    rows: list[tuple[str, ...]] = []
    for cell in itertools.product(*per_attr):
        count = n * math.prod(p for _, p in cell)
        if count.denominator != 1:
            raise DataError(
                f"n={n} does not give an integer count for cell "
                f"{tuple(v for v, _ in cell)} (n * p = {count})")
        rows.extend([tuple(v for v, _ in cell)] * int(count))
    return Dataset(schema, tuple(rows))


def synthesize_independent(spec: SynthesisSpec, schema: Sequence[AttributeSpec]) -> Dataset:
    """Exact-independence dataset with the requested favorable fractions.

    Each attribute is binarized: favorable mass goes to its first favorable
    value, the rest to its first unfavorable value (domain order).
    """
    schema = tuple(schema)
    marginals = {}
    for attr in schema:
        if attr.name not in spec.targets:
            raise DataError(f"no target fraction for attribute {attr.name!r}")
        p = spec.targets[attr.name]
        dist: dict[str, Fraction] = {}
        if p > 0:
            if not attr.favorable:
                raise DataError(f"attribute {attr.name!r} has no favorable value")
            dist[attr.favorable_values[0]] = p
        if p < 1:
            if not attr.unfavorable_values:
                raise DataError(f"attribute {attr.name!r} has no unfavorable value")
            dist[attr.unfavorable_values[0]] = 1 - p
        marginals[attr.name] = dist
    extra = set(spec.targets) - {a.name for a in schema}
    if extra:
        raise DataError(f"targets name unknown attributes: {sorted(extra)}")
    return synthesize_from_marginals(schema, marginals, spec.n)


# -- files -----------------------------------------------------------------


def load_schema(path: str | os.PathLike) -> Schema:
    """Read a JSON schema sidecar: ``{"attributes": [{name, domain, ...}]}``."""
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    attrs = obj["attributes"] if isinstance(obj, dict) else obj
    return tuple(AttributeSpec.from_dict(a) for a in attrs)


def dump_schema(schema: Sequence[AttributeSpec]) -> str:
    return json.dumps({"attributes": [a.to_dict() for a in schema]}, indent=2) + "\n"


def save_schema(schema: Sequence[AttributeSpec], path: str | os.PathLike) -> None:
    atomic_write(path, dump_schema(schema))


def _data_lines(fh) -> Iterable[str]:
    # lines starting with '#' carry provenance comments, not data
    for line in fh:
        if line.startswith("#") or not line.strip():
            continue
        yield line


def parse_csv(text: str, schema: Sequence[AttributeSpec] | None = None) -> Dataset:
    reader = csv.reader(_data_lines(io.StringIO(text)))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("empty file") from None
    has_label = bool(header) and header[-1] == LABEL_COLUMN
    names = header[:-1] if has_label else header
    if not names:
        raise DataError("no attribute columns")
    body = []
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != len(header):
            raise DataError(
                f"line {lineno}: {len(rec)} fields, header has {len(header)}")
        body.append([t.strip() for t in rec])
    if not body:
        raise DataError("empty dataset: header without rows")

    labels = None
    if has_label:
        try:
            labels = tuple(int(r[-1]) for r in body)
        except ValueError:
            raise DataError("label tokens must be 1 or 0") from None
        body = [r[:-1] for r in body]

    if schema is None:
        inferred = []
        for i, name in enumerate(names):
            seen = list(dict.fromkeys(r[i] for r in body))
            if len(seen) < 2:
                # a constant column still needs a two-value domain
                seen.append(f"not_{seen[0]}")
            inferred.append(AttributeSpec(name, tuple(seen)))
        schema = tuple(inferred)
    else:
        schema = tuple(schema)
        if [a.name for a in schema] != names:
            raise DataError(
                f"CSV columns {names} do not match schema {[a.name for a in schema]}")
    return Dataset(schema, tuple(tuple(r) for r in body), labels)


def load_csv(path: str | os.PathLike, schema: Sequence[AttributeSpec] | None = None) -> Dataset:
    """Load a dataset. Without ``schema`` domains are inferred in first-appearance order."""
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_csv(fh.read(), schema)


def dump_csv(d: Dataset) -> str:
    if len(d) == 0:
        raise DataError("refusing to write an empty dataset")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(d.names) + ([LABEL_COLUMN] if d.is_labeled else [])
    writer.writerow(header)
    for j, row in enumerate(d.rows):
        writer.writerow(list(row) + ([d.labels[j]] if d.is_labeled else []))
    return buf.getvalue()


def save_csv(d: Dataset, path: str | os.PathLike) -> None:
    atomic_write(path, dump_csv(d))


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

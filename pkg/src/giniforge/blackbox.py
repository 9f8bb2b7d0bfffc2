"""Declarative black-box labelers.

A rule is plain configuration (see :func:`rule_from_config`) so an audit can
replay exactly the decision logic that was declared.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data import NEGATIVE, POSITIVE, AttributeSpec, DataError, Dataset


class RuleError(DataError):
    pass


@dataclass(frozen=True)
class ConjunctiveRule:
    """Positive iff every named attribute takes one of its favorable values.

    An attribute with an empty favorable set makes every row negative.
    """

    favorable: Mapping[str, frozenset[str]]

    def __post_init__(self):
        fav = {k: frozenset(str(v) for v in vs) for k, vs in self.favorable.items()}
        if not fav:
            raise RuleError("conjunctive rule needs at least one attribute")
        object.__setattr__(self, "favorable", fav)

    @classmethod
    def from_schema(cls, schema: Sequence[AttributeSpec],
                    attributes: Sequence[str] | None = None) -> "ConjunctiveRule":
        by_name = {a.name: a for a in schema}
        names = list(by_name) if attributes is None else list(attributes)
        missing = [n for n in names if n not in by_name]
        if missing:
            raise RuleError(f"rule names unknown attributes {missing}")
        return cls({n: by_name[n].favorable for n in names})

    @property
    def attributes(self) -> tuple[str, ...]:
        return tuple(self.favorable)

    def label(self, row: Mapping[str, str]) -> int:
        try:
            ok = all(row[a] in vals for a, vals in self.favorable.items())
        except KeyError as exc:
            raise RuleError(f"row lacks attribute {exc.args[0]!r}") from None
        return POSITIVE if ok else NEGATIVE

    def validate(self, schema: Sequence[AttributeSpec]) -> None:
        by_name = {a.name: a for a in schema}
        for name, vals in self.favorable.items():
            if name not in by_name:
                raise RuleError(f"rule attribute {name!r} not in schema")
            stray = vals - set(by_name[name].domain)
            if stray:
                raise RuleError(f"favorable values {sorted(stray)} not in domain of {name!r}")

    def to_config(self) -> dict:
        return {
            "variant": "conjunctive",
            "favorable": {k: sorted(v) for k, v in self.favorable.items()},
        }


@dataclass(frozen=True)
class TieredRule:
    """Three salary tiers: high is always positive, low always negative, and the
    middle tier is positive only for the advantaged group."""

    tier_attribute: str
    low: str
    medium: str
    high: str
    sensitive_attribute: str
    advantaged: str

    def __post_init__(self):
        if len({self.low, self.medium, self.high}) != 3:
            raise RuleError("tier values must be distinct")
        if self.tier_attribute == self.sensitive_attribute:
            raise RuleError("tier and sensitive attribute must differ")

    @property
    def attributes(self) -> tuple[str, ...]:
        return (self.tier_attribute, self.sensitive_attribute)

    def label(self, row: Mapping[str, str]) -> int:
        try:
            tier = row[self.tier_attribute]
            group = row[self.sensitive_attribute]
        except KeyError as exc:
            raise RuleError(f"row lacks attribute {exc.args[0]!r}") from None
        if tier == self.high:
            return POSITIVE
        if tier == self.medium:
            return POSITIVE if group == self.advantaged else NEGATIVE
        if tier == self.low:
            return NEGATIVE
        raise RuleError(f"{tier!r} is not a tier of {self.tier_attribute!r}")

    def validate(self, schema: Sequence[AttributeSpec]) -> None:
        by_name = {a.name: a for a in schema}
        for name in self.attributes:
            if name not in by_name:
                raise RuleError(f"rule attribute {name!r} not in schema")
        tier = by_name[self.tier_attribute]
        if set(tier.domain) != {self.low, self.medium, self.high}:
            raise RuleError(f"{self.tier_attribute!r} must have exactly the three tier values")
        sens = by_name[self.sensitive_attribute]
        if len(sens.domain) != 2:
            raise RuleError(f"sensitive attribute {sens.name!r} must be binary")
        if self.advantaged not in sens.domain:
            raise RuleError(f"{self.advantaged!r} not in domain of {sens.name!r}")

    def to_config(self) -> dict:
        return {
            "variant": "tiered",
            "tier_attribute": self.tier_attribute,
            "tiers": {"low": self.low, "medium": self.medium, "high": self.high},
            "sensitive_attribute": self.sensitive_attribute,
            "advantaged": self.advantaged,
        }


@dataclass(frozen=True)
class LookupRule:
    """Explicit table from value vectors (over ``attributes``) to labels."""

    attributes: tuple[str, ...]
    table: Mapping[tuple[str, ...], int]

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        table = {tuple(str(v) for v in k): int(y) for k, y in self.table.items()}
        for key, y in table.items():
            if len(key) != len(self.attributes):
                raise RuleError(f"lookup key {key} has wrong arity")
            if y not in (POSITIVE, NEGATIVE):
                raise RuleError("lookup labels must be 1 or 0")
        object.__setattr__(self, "table", table)

    def label(self, row: Mapping[str, str]) -> int:
        try:
            key = tuple(row[a] for a in self.attributes)
        except KeyError as exc:
            raise RuleError(f"row lacks attribute {exc.args[0]!r}") from None
        try:
            return self.table[key]
        except KeyError:
            raise RuleError(f"no lookup entry for {key}") from None

    def validate(self, schema: Sequence[AttributeSpec]) -> None:
        by_name = {a.name: a for a in schema}
        for name in self.attributes:
            if name not in by_name:
                raise RuleError(f"rule attribute {name!r} not in schema")
        for key in itertools.product(*(by_name[a].domain for a in self.attributes)):
            if key not in self.table:
                raise RuleError(f"lookup table is not total: missing {key}")

    def to_config(self) -> dict:
        return {
            "variant": "lookup",
            "attributes": list(self.attributes),
            "table": [{"values": list(k), "label": y} for k, y in self.table.items()],
        }


BlackBoxRule = ConjunctiveRule | TieredRule | LookupRule


def label(rule: BlackBoxRule, row: Mapping[str, str]) -> int:
    return rule.label(row)


def label_dataset(rule: BlackBoxRule, d: Dataset) -> Dataset:
    """Return ``d`` with labels produced by ``rule``; rows are left untouched."""
    rule.validate(d.schema)
    if isinstance(rule, ConjunctiveRule) and len(d):
        mask = np.ones(len(d), dtype=bool)
        for name, vals in rule.favorable.items():
            attr = d.attribute(name)
            col = d.codes[:, d.names.index(name)]
            mask &= np.isin(col, [attr.index(v) for v in vals])
        return d.with_labels(int(v) for v in mask)
    names = d.names
    labels = tuple(rule.label(dict(zip(names, row))) for row in d.rows)
    return d.with_labels(labels)


def rule_from_config(obj: Mapping, schema: Sequence[AttributeSpec] | None = None) -> BlackBoxRule:
    variant = obj.get("variant")
    if variant == "conjunctive":
        if "favorable" in obj:
            return ConjunctiveRule({k: frozenset(v) for k, v in obj["favorable"].items()})
        if schema is None:
            raise RuleError("conjunctive rule without favorable sets needs a schema")
        return ConjunctiveRule.from_schema(schema, obj.get("attributes"))
    if variant == "tiered":
        tiers = obj["tiers"]
        return TieredRule(obj["tier_attribute"], tiers["low"], tiers["medium"],
                          tiers["high"], obj["sensitive_attribute"], obj["advantaged"])
    if variant == "lookup":
        table = {tuple(e["values"]): e["label"] for e in obj["table"]}
        return LookupRule(tuple(obj["attributes"]), table)
    raise RuleError(f"unknown rule variant {variant!r}")


def load_rule(path: str | os.PathLike, schema: Sequence[AttributeSpec] | None = None) -> BlackBoxRule:
    with open(path, encoding="utf-8") as fh:
        return rule_from_config(json.load(fh), schema)

"""Sample forging: choose a training composition so that a tree grown on
black-box labels asks about the sensitive attribute at a chosen depth.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .blackbox import ConjunctiveRule, label_dataset
from .data import AttributeSpec, DataError, Dataset, SynthesisSpec, fraction_favorable, synthesize_independent
from .theory import OrderingPrediction, predict_order, theorem2_bound
from .tree import DecisionTree, attribute_depth, build_tree
from .validation import parse_fraction

LAST = "last"


class ForgeError(DataError):
    pass


@dataclass(frozen=True)
class ForgeRequest:
    """What the operator wants.

    ``rule_attributes`` defaults to every schema attribute. ``fixed`` holds a
    sample imposed by a regulator; forging then reduces to a feasibility check.
    ``lowest``/``highest``/``step`` control the evenly spaced fractions.
    """

    schema: tuple[AttributeSpec, ...]
    sensitive: str
    target_depth: int | str = LAST
    n: int = 10
    rule_attributes: tuple[str, ...] | None = None
    fixed: Dataset | None = None
    lowest: Fraction = Fraction(1, 10)
    highest: Fraction = Fraction(9, 10)
    step: Fraction = Fraction(1, 10)

    def __post_init__(self):
        object.__setattr__(self, "schema", tuple(self.schema))
        names = [a.name for a in self.schema]
        attrs = tuple(self.rule_attributes) if self.rule_attributes else tuple(names)
        object.__setattr__(self, "rule_attributes", attrs)
        if self.sensitive not in attrs:
            raise ForgeError(f"sensitive attribute {self.sensitive!r} is not used by the rule")
        for name in attrs:
            if name not in names:
                raise ForgeError(f"rule attribute {name!r} not in schema")
        if self.target_depth != LAST:
            if not isinstance(self.target_depth, int) or self.target_depth < 1:
                raise ForgeError("target depth must be a positive integer or 'last'")
            if self.target_depth > len(attrs):
                raise ForgeError(
                    f"target depth {self.target_depth} exceeds the {len(attrs)} rule attributes")

    @property
    def depth(self) -> int:
        return len(self.rule_attributes) if self.target_depth == LAST else self.target_depth

    @property
    def rule(self) -> ConjunctiveRule:
        return ConjunctiveRule.from_schema(self.schema, self.rule_attributes)


@dataclass
class ForgeResult:
    dataset: Dataset
    prediction: OrderingPrediction
    tree: DecisionTree
    fractions: dict[str, Fraction]
    achieved_depth: int

    def report(self) -> dict:
        return {
            "fractions": {k: str(v) for k, v in self.fractions.items()},
            "predicted_order": list(self.prediction.order),
            "sensitive_depth": self.achieved_depth,
            "rows": len(self.dataset),
            "positives": sum(self.dataset.labels),
        }


def spaced_fractions(k: int, lowest=Fraction(1, 10), highest=Fraction(9, 10),
                     step=Fraction(1, 10)) -> list[Fraction]:
    """``k`` evenly spaced fractions centred on one half, within ``[lowest, highest]``."""
    start = Fraction(1, 2) - ((k - 1) // 2) * step
    vals = [start + i * step for i in range(k)]
    if vals[0] < lowest or vals[-1] > highest or vals[0] <= 0 or vals[-1] >= 1:
        raise ForgeError(
            f"cannot place {k} fractions with step {step} inside [{lowest}, {highest}]")
    return vals


def required_size(fractions: Sequence[Fraction]) -> int:
    """Smallest sample size accepted for these fractions."""
    return math.prod(Fraction(f).denominator for f in fractions)


def plan_fractions(req: ForgeRequest) -> dict[str, Fraction]:
    attrs = list(req.rule_attributes)
    vals = spaced_fractions(len(attrs), req.lowest, req.highest, req.step)
    below = [a for a in attrs if a != req.sensitive][: req.depth - 1]
    above = [a for a in attrs if a != req.sensitive and a not in below]
    ordered = below + [req.sensitive] + above
    plan = dict(zip(ordered, vals))
    return {a: plan[a] for a in attrs}


def forge_sample(req: ForgeRequest) -> ForgeResult:
    """Synthesize a labeled sample that puts the sensitive attribute at ``req.depth``.

    Labels come only from the declared conjunctive rule. The tree is rebuilt
    and the achieved depth checked before returning.
    """
    if req.fixed is not None:
        raise ForgeError("a fixed sample cannot be forged; use check_fixed_sample")
    extra = [a.name for a in req.schema if a.name not in req.rule_attributes]
    if extra:
        raise ForgeError(f"schema attributes {extra} are not part of the rule")
    for a in req.schema:
        if not a.favorable or not a.unfavorable_values:
            raise ForgeError(f"{a.name!r} needs both favorable and unfavorable values")
    fracs = plan_fractions(req)
    need = required_size(fracs.values())
    if req.n % need:
        raise ForgeError(f"sample size {req.n} is not a multiple of {need}")
    d = synthesize_independent(SynthesisSpec(fracs, req.n), req.schema)
    d = label_dataset(req.rule, d)
    tree = build_tree(d)
    achieved = attribute_depth(tree, req.sensitive)
    if achieved != req.depth:
        raise ForgeError(
            f"forged sample put {req.sensitive!r} at depth {achieved}, wanted {req.depth}")
    return ForgeResult(d, predict_order(fracs), tree, fracs, achieved)


@dataclass
class FixedSampleReport:
    fractions: dict[str, Fraction]
    sensitive: str
    feasible: bool
    blocking: list[str] = field(default_factory=list)
    hiding_possible: bool = True
    sensitive_depth: int | None = None
    positive_fraction: Fraction | None = None
    bound: Fraction | None = None
    tree: DecisionTree | None = None
    labeled: Dataset | None = None

    def to_dict(self) -> dict:
        out = {
            "fractions": {k: str(v) for k, v in self.fractions.items()},
            "sensitive": self.sensitive,
            "feasible_as_last": self.feasible,
            "blocking_attributes": self.blocking,
            "hiding_possible": self.hiding_possible,
        }
        if self.sensitive_depth is not None:
            out["sensitive_depth"] = self.sensitive_depth
            out["positive_fraction"] = str(self.positive_fraction)
            out["bound"] = str(self.bound)
        return out


def check_fixed_sample(req: ForgeRequest) -> FixedSampleReport:
    """Given an imposed unlabeled sample, can the sensitive question be kept in
    the last level? Infeasibility is reported, not raised."""
    if req.fixed is None:
        raise ForgeError("request has no fixed sample")
    d = req.fixed
    fracs = {a: fraction_favorable(d, a) for a in req.rule_attributes}
    ps = fracs[req.sensitive]
    blocking = [a for a, v in fracs.items() if a != req.sensitive and v >= ps]
    rep = FixedSampleReport(fracs, req.sensitive, feasible=not blocking, blocking=blocking)
    if len(fracs) == 1:
        rep.hiding_possible = False
    if rep.feasible:
        labeled = label_dataset(req.rule, d.with_labels(None))
        tree = build_tree(labeled)
        rep.sensitive_depth = attribute_depth(tree, req.sensitive)
        rep.positive_fraction = Fraction(sum(labeled.labels), len(labeled))
        rep.bound = theorem2_bound(1 - ps, len(fracs))
        rep.tree = tree
        rep.labeled = labeled
        if rep.sensitive_depth == 1:
            rep.hiding_possible = False
    return rep


def request_from_config(obj: Mapping, schema: Sequence[AttributeSpec],
                        fixed: Dataset | None = None) -> ForgeRequest:
    """Build a request from ``{"sensitive", "target_depth", "n", ...}``."""
    depth = obj.get("target_depth", LAST)
    kwargs = {}
    for key in ("lowest", "highest", "step"):
        if key in obj:
            kwargs[key] = parse_fraction(obj[key])
    return ForgeRequest(
        schema=tuple(schema),
        sensitive=obj["sensitive"],
        target_depth=depth if depth == LAST else int(depth),
        n=int(obj.get("n", 10)),
        rule_attributes=tuple(obj["rule_attributes"]) if obj.get("rule_attributes") else None,
        fixed=fixed,
        **kwargs,
    )


def load_request(path: str | os.PathLike, schema: Sequence[AttributeSpec],
                 fixed: Dataset | None = None) -> ForgeRequest:
    with open(path, encoding="utf-8") as fh:
        return request_from_config(json.load(fh), schema, fixed)

"""Closed-form predictions of tree shape, and checks of those predictions
against trees actually grown on exact-independence samples.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from scipy.optimize import bisect

from .blackbox import ConjunctiveRule, TieredRule, label_dataset
from .data import AttributeSpec, DataError, Dataset, SynthesisSpec, fraction_favorable, synthesize_independent
from .datasets import tiered_sample
from .gini import (HIGH, LOW, MEDIUM, MULTIWAY, SPECIES, TIER_SPLITS, binary_partition,
                   closed_form_conjunctive_impurity, gini_impurity, multiway,
                   tiered_curves, tiered_multiway_salary)
from .tree import DecisionTree, Node, StoppingPolicy, attribute_depth, build_tree

FAV, UNFAV = "fav", "unfav"


@dataclass(frozen=True)
class OrderingPrediction:
    """Predicted root-to-leaf order of attributes.

    ``ties`` lists groups of attributes sharing a fraction; inside a group
    the tree falls back to schema order, so no strict claim is made.
    ``degenerate`` attributes (fraction 0 or 1) are left out of ``order``.
    """

    order: tuple[str, ...]
    fractions: Mapping[str, Fraction]
    ties: tuple[tuple[str, ...], ...] = ()
    degenerate: tuple[str, ...] = ()
    dependent_mode: bool = False

    @property
    def strict(self) -> bool:
        return not self.ties and not self.degenerate

    def depth_of(self, attr: str) -> int | None:
        return self.order.index(attr) + 1 if attr in self.order else None


def predict_order(p: Mapping[str, Fraction]) -> OrderingPrediction:
    """Order attributes by ascending favorable fraction (insertion order breaks ties)."""
    p = {k: Fraction(v) for k, v in p.items()}
    for k, v in p.items():
        if not 0 <= v <= 1:
            raise DataError(f"fraction for {k!r} outside [0, 1]: {v}")
    degenerate = tuple(k for k, v in p.items() if v in (0, 1))
    live = [k for k in p if k not in degenerate]
    position = {k: i for i, k in enumerate(p)}
    order = tuple(sorted(live, key=lambda k: (p[k], position[k])))
    ties = tuple(
        tuple(group) for _, g in itertools.groupby(order, key=p.__getitem__)
        if len(group := list(g)) > 1
    )
    return OrderingPrediction(order, p, ties, degenerate)


def binary_schema(names: Sequence[str], sensitive: str | None = None) -> tuple[AttributeSpec, ...]:
    return tuple(AttributeSpec(n, (FAV, UNFAV), favorable={FAV}, sensitive=(n == sensitive))
                 for n in names)


def conjunctive_sample(p: Mapping[str, Fraction], n: int, sensitive: str | None = None) -> Dataset:
    """Exact-independence sample over favorable/unfavorable attributes, labeled
    by the all-favorable rule."""
    schema = binary_schema(list(p), sensitive)
    d = synthesize_independent(SynthesisSpec(dict(p), n), schema)
    return label_dataset(ConjunctiveRule.from_schema(schema), d)


# -- ordering under independence ------------------------------------------------


@dataclass
class OrderReport:
    prediction: OrderingPrediction
    depths: dict[str, int | None]
    matches: dict[str, bool]
    closed_form: dict[str, tuple[Fraction, Fraction]] = field(default_factory=dict)

    @property
    def closed_form_ok(self) -> bool:
        return all(a == b for a, b in self.closed_form.values())

    @property
    def ok(self) -> bool:
        return all(self.matches.values()) and self.closed_form_ok

    @property
    def note(self) -> str:
        if self.prediction.ties:
            return "tie: any order valid; tree follows schema order"
        return "strict order"

    def to_dict(self) -> dict:
        return {
            "fractions": {k: str(v) for k, v in self.prediction.fractions.items()},
            "predicted_order": list(self.prediction.order),
            "tree_depths": self.depths,
            "matches": self.matches,
            "closed_form_equal": self.closed_form_ok,
            "note": self.note,
            "ok": self.ok,
        }


def verify_theorem1(p: Mapping[str, Fraction], n: int) -> OrderReport:
    """Grow a tree on an exact-independence conjunctive sample and compare the
    depth of every attribute with its predicted rank."""
    p = {k: Fraction(v) for k, v in p.items()}
    d = conjunctive_sample(p, n)
    tree = build_tree(d, StoppingPolicy(), MULTIWAY)
    pred = predict_order(p)
    depths = {k: attribute_depth(tree, k) for k in p}
    matches = {k: depths[k] == pred.depth_of(k) for k in p}
    closed = {k: (closed_form_conjunctive_impurity(k, p), gini_impurity(d, multiway(k)))
              for k in p}
    return OrderReport(pred, depths, matches, closed)


# -- ordering without independence -----------------------------------------------


def predict_node_attributes(d: Dataset, attributes: Sequence[str] | None = None
                            ) -> dict[tuple[tuple[str, str], ...], str]:
    """Per-node prediction for arbitrary (dependent) data under the conjunctive rule.

    At each impure node the attribute with the smallest favorable share among
    the node's rows is asked (schema order on ties). Keys are the value paths
    leading to each question node. Every attribute must have exactly one
    favorable value.
    """
    if d.labels is None:
        raise DataError("dataset is unlabeled")
    names = list(attributes) if attributes is not None else list(d.names)
    for name in names:
        if len(d.attribute(name).favorable) != 1:
            raise DataError(f"{name!r} needs exactly one favorable value")
    out: dict[tuple[tuple[str, str], ...], str] = {}

    def rec(sub: Dataset, remaining: list[str], path):
        pos = sum(sub.labels)
        if not remaining or pos == 0 or pos == len(sub):
            return
        fracs = {a: fraction_favorable(sub, a) for a in remaining}
        choice = min(remaining, key=lambda a: fracs[a])
        out[path] = choice
        j = sub.names.index(choice)
        rest = [a for a in remaining if a != choice]
        for value in sub.attribute(choice).domain:
            idx = [i for i, r in enumerate(sub.rows) if r[j] == value]
            if idx:
                rec(sub.subset(idx), rest, path + ((choice, value),))

    if len(d):
        rec(d, names, ())
    return out


def tree_node_attributes(t: DecisionTree) -> dict[tuple[tuple[str, str], ...], str]:
    """Question attribute of every non-empty inner node, keyed like
    :func:`predict_node_attributes` (multiway trees only)."""
    out = {}

    def rec(node: Node, path):
        if node.is_leaf:
            return
        out[path] = node.split.attribute
        for values, child in zip(node.branches, node.children):
            if child.n_samples:
                rec(child, path + ((node.split.attribute, values[0]),))

    rec(t.root, ())
    return out


def dependent_prediction(d: Dataset) -> OrderingPrediction:
    """Order along the all-favorable path, recomputing shares at every node."""
    plan = predict_node_attributes(d)
    order, path = [], ()
    fracs = {}
    sub = d
    while path in plan:
        attr = plan[path]
        fracs[attr] = fraction_favorable(sub, attr)
        order.append(attr)
        fav = sub.attribute(attr).favorable_values[0]
        j = sub.names.index(attr)
        sub = sub.subset(i for i, r in enumerate(sub.rows) if r[j] == fav)
        path = path + ((attr, fav),)
    return OrderingPrediction(tuple(order), fracs, dependent_mode=True)


# -- hiding the sensitive attribute in the last level --------------------------------


def theorem2_bound(x, k: int) -> Fraction:
    """Largest share of positives when a share ``x`` belongs to the
    disadvantaged group and ``k`` attributes each need a favorable value."""
    x = Fraction(x)
    if not 0 <= x <= 1:
        raise DataError(f"x must lie in [0, 1], got {x}")
    if k < 1:
        raise DataError("k must be a positive integer")
    return (1 - x) ** k


@dataclass
class LastLevelReport:
    fractions: dict[str, Fraction]
    sensitive: str
    strictly_maximal: bool
    tie: bool
    depth: int | None
    positive_fraction: Fraction
    product: Fraction
    bound: Fraction

    @property
    def k(self) -> int:
        return len(self.fractions)

    @property
    def ok(self) -> bool:
        if self.positive_fraction != self.product or self.product > self.bound:
            return False
        if (self.product == self.bound) != all(v == self.fractions[self.sensitive]
                                               for v in self.fractions.values()):
            return False
        if self.strictly_maximal:
            return self.depth == self.k
        if self.tie:
            # equal shares: schema order decides
            return self.depth == list(self.fractions).index(self.sensitive) + 1
        return True

    def to_dict(self) -> dict:
        return {
            "fractions": {k: str(v) for k, v in self.fractions.items()},
            "sensitive": self.sensitive,
            "strictly_maximal": self.strictly_maximal,
            "tie": self.tie,
            "sensitive_depth": self.depth,
            "attributes": self.k,
            "positive_fraction": str(self.positive_fraction),
            "bound": str(self.bound),
            "ok": self.ok,
        }


def verify_theorem2(p: Mapping[str, Fraction], sensitive: str, n: int) -> LastLevelReport:
    p = {k: Fraction(v) for k, v in p.items()}
    if sensitive not in p:
        raise DataError(f"unknown sensitive attribute {sensitive!r}")
    d = conjunctive_sample(p, n, sensitive)
    tree = build_tree(d)
    ps = p[sensitive]
    others = [v for k, v in p.items() if k != sensitive]
    return LastLevelReport(
        fractions=p,
        sensitive=sensitive,
        strictly_maximal=all(v < ps for v in others),
        tie=all(v == ps for v in others),
        depth=attribute_depth(tree, sensitive),
        positive_fraction=Fraction(sum(d.labels), len(d)),
        product=math.prod(p.values()),
        bound=theorem2_bound(1 - ps, len(p)),
    )


# -- three-tier salary curves --------------------------------------------------------


@dataclass(frozen=True)
class Intersection:
    pair: tuple[str, str]
    p0: Fraction | float
    impurity: Fraction | float
    exact: bool


@dataclass
class CurveTable:
    p5: Fraction
    pe: Fraction
    grid: list[Fraction]
    values: list[dict[str, Fraction]]
    argmin: list[frozenset[str]]
    intersections: list[Intersection]

    def rows(self):
        for p0, vals, best in zip(self.grid, self.values, self.argmin):
            yield p0, vals, best


def _grid(lo: Fraction, hi: Fraction, step: Fraction) -> list[Fraction]:
    if step <= 0:
        raise DataError("grid step must be positive")
    count = math.floor((hi - lo) / step)
    pts = [lo + i * step for i in range(count + 1)]
    if pts[-1] != hi:
        pts.append(hi)
    return pts


def _argmin(vals: Mapping[str, Fraction]) -> frozenset[str]:
    m = min(vals.values())
    return frozenset(k for k, v in vals.items() if v == m)


def _intersections(curve, grid: Sequence[Fraction], values, pair, xtol: float) -> list[Intersection]:
    a, b = pair
    diffs = [v[a] - v[b] for v in values]
    out = []
    for x, dv, v in zip(grid, diffs, values):
        if dv == 0:
            out.append(Intersection(pair, x, v[a], True))
    for i in range(len(grid) - 1):
        d0, d1 = diffs[i], diffs[i + 1]
        if d0 * d1 < 0:
            def f(x):
                v = curve(Fraction(x))
                return float(v[a] - v[b])
            root = bisect(f, float(grid[i]), float(grid[i + 1]), xtol=xtol, maxiter=200)
            out.append(Intersection(pair, root, float(curve(Fraction(root))[a]), False))
    return sorted(out, key=lambda s: float(s.p0))


def theorem3_region(p5, pe, grid_step, xtol: float = 1e-15) -> CurveTable:
    """Tabulate the four root-candidate impurities over the low-salary share
    ``p0`` in ``[0, 1 - p5]`` and locate pairwise crossings.

    Crossings on grid points are reported exactly; the others are refined by
    bisection.
    """
    p5, pe, step = Fraction(p5), Fraction(pe), Fraction(grid_step)
    if not 0 <= p5 <= 1 or not 0 <= pe <= 1:
        raise DataError("p5 and pe must lie in [0, 1]")
    if not 0 < step < 1:
        raise DataError("grid step must lie in (0, 1)")
    grid = _grid(Fraction(0), 1 - p5, step)

    def curve(p0):
        return tiered_curves(p0, p5, pe)

    values = [curve(x) for x in grid]
    argmin = [_argmin(v) for v in values]
    inter = []
    for pair in itertools.combinations(TIER_SPLITS, 2):
        inter.extend(_intersections(curve, grid, values, pair, xtol))
    return CurveTable(p5, pe, grid, values, argmin, inter)


def tiered_count_impurities(p0, p5, pe, n: int) -> dict[str, Fraction]:
    """Count-based impurities of the same four candidates (plus the multiway
    salary split) on an exact-independence sample of size ``n``."""
    d = tiered_sample(p0, p5, pe, n)
    rule = TieredRule("salary", "0", "5", "10", "species", "elf")
    d = label_dataset(rule, d)
    return {
        SPECIES: gini_impurity(d, multiway("species")),
        LOW: gini_impurity(d, binary_partition("salary", ["0"])),
        MEDIUM: gini_impurity(d, binary_partition("salary", ["5"])),
        HIGH: gini_impurity(d, binary_partition("salary", ["10"])),
        "salary": gini_impurity(d, multiway("salary")),
    }


@dataclass
class TierReport:
    table: CurveTable
    species_never_unique: bool
    endpoint_values: dict[str, dict[str, Fraction]]
    multiway_salary: Fraction
    count_checks: list[tuple[Fraction, bool]]

    @property
    def ok(self) -> bool:
        return self.species_never_unique and all(ok for _, ok in self.count_checks)

    def to_dict(self) -> dict:
        return {
            "p5": str(self.table.p5),
            "pe": str(self.table.pe),
            "grid_points": len(self.table.grid),
            "species_never_unique_interior_argmin": self.species_never_unique,
            "endpoint_values": {k: {s: str(v) for s, v in vals.items()}
                                for k, vals in self.endpoint_values.items()},
            "multiway_salary_impurity": str(self.multiway_salary),
            "intersections": [
                {"pair": list(i.pair), "p0": _render(i.p0), "impurity": _render(i.impurity),
                 "exact": i.exact}
                for i in self.table.intersections if SPECIES in i.pair
            ],
            "count_checks": [{"p0": str(x), "ok": ok} for x, ok in self.count_checks],
            "ok": self.ok,
        }


def _render(x) -> str:
    return str(x) if isinstance(x, Fraction) else f"{x:.9f}"


def verify_theorem3(p5=Fraction(1, 2), pe=Fraction(1, 2), grid_step=Fraction(1, 1000),
                    count_n: int = 64) -> TierReport:
    """Check that the group split is never the unique best root question for
    an interior low-salary share, and cross-check the curves against counts at
    every grid point where ``count_n`` yields integer cells."""
    table = theorem3_region(p5, pe, grid_step)
    interior = [best for x, _, best in table.rows() if 0 < x < table.grid[-1]]
    never = all(best != frozenset({SPECIES}) for best in interior)
    ends = {str(table.grid[0]): table.values[0], str(table.grid[-1]): table.values[-1]}
    checks = []
    for x, vals, _ in table.rows():
        cells = [t * g for t in (x, table.p5, 1 - x - table.p5) for g in (pe, 1 - pe)]
        if any((c * count_n).denominator != 1 for c in cells):
            continue
        counted = tiered_count_impurities(x, table.p5, pe, count_n)
        checks.append((x, all(counted[s] == vals[s] for s in TIER_SPLITS)))
    return TierReport(table, never, ends, tiered_multiway_salary(table.p5, pe), checks)


# -- two-attribute difference surface ---------------------------------------------------


def difference_surface(grid_step) -> list[tuple[Fraction, Fraction, Fraction, int]]:
    """``(p_e, p_s, G(species) - G(salary), sign)`` over the unit square.

    A positive difference means ``salary`` is asked at the root.
    """
    step = Fraction(grid_step)
    if not 0 < step < 1:
        raise DataError("grid step must lie in (0, 1)")
    axis = _grid(Fraction(0), Fraction(1), step)
    out = []
    for pe in axis:
        for ps in axis:
            delta = 2 * pe * ps * (pe - ps)
            out.append((pe, ps, delta, (delta > 0) - (delta < 0)))
    return out

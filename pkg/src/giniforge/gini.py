"""Exact Gini index / weighted Gini impurity and closed forms for rule families.

Every value is a :class:`~fractions.Fraction`; split comparisons are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import DataError, Dataset, schema_index

MULTIWAY = "multiway"
BINARY = "binary"


@dataclass(frozen=True)
class LabelCounts:
    positives: int
    negatives: int

    @property
    def total(self) -> int:
        return self.positives + self.negatives

    @property
    def majority(self) -> int:
        # an even split resolves to the negative class
        return 1 if self.positives > self.negatives else 0


@dataclass(frozen=True)
class SplitDescriptor:
    """A candidate question on one attribute.

    ``subset`` is ``None`` for a multiway split (one branch per domain value)
    and the tested value set for a binary partition.
    """

    attribute: str
    subset: tuple[str, ...] | None = None

    @property
    def mode(self) -> str:
        return MULTIWAY if self.subset is None else BINARY

    def branches(self, values: Sequence[str]) -> list[tuple[str, ...]]:
        """Value groups of each branch, given the values available at the node."""
        if self.subset is None:
            return [(v,) for v in values]
        inside = tuple(v for v in values if v in self.subset)
        outside = tuple(v for v in values if v not in self.subset)
        if not inside or not outside:
            raise DataError(f"partition {self.subset} of {self.attribute!r} is not proper")
        return [inside, outside]

    def describe(self) -> str:
        if self.subset is None:
            return f"{self.attribute} (multiway)"
        return f"{self.attribute} in {{{', '.join(self.subset)}}}"


def multiway(attribute: str) -> SplitDescriptor:
    return SplitDescriptor(attribute)


def binary_partition(attribute: str, subset: Iterable[str]) -> SplitDescriptor:
    subset = tuple(subset)
    if not subset:
        raise DataError("binary partition needs a nonempty subset")
    return SplitDescriptor(attribute, subset)


def gini_index(c: LabelCounts) -> Fraction:
    """``1 - p_pos**2 - p_neg**2``; lies in ``[0, 1/2]``."""
    n = c.total
    if n < 1:
        raise DataError("Gini index of an empty set is undefined")
    return Fraction(2 * c.positives * c.negatives, n * n)


def weighted_impurity(branches: Iterable[LabelCounts]) -> Fraction:
    """Size-weighted sum of branch Gini indices. Empty branches weigh zero."""
    branches = list(branches)
    n = sum(b.total for b in branches)
    if n < 1:
        raise DataError("impurity of an empty split is undefined")
    # sum_b (n_b/n) * 2 p_b q_b / n_b**2  ==  sum_b 2 p_b q_b / (n_b n)
    total = Fraction(0)
    for b in branches:
        if b.total:
            total += Fraction(2 * b.positives * b.negatives, b.total * n)
    return total


def value_counts(codes: np.ndarray, labels: np.ndarray, size: int) -> tuple[list[int], list[int]]:
    """Per-value positive and total counts for one column of domain codes."""
    tot = np.bincount(codes, minlength=size)
    pos = np.bincount(codes, weights=labels, minlength=size)
    return [int(x) for x in pos], [int(x) for x in tot]


def branch_counts(pos: Sequence[int], tot: Sequence[int],
                  groups: Sequence[Sequence[int]]) -> list[LabelCounts]:
    out = []
    for g in groups:
        p = sum(pos[i] for i in g)
        t = sum(tot[i] for i in g)
        out.append(LabelCounts(p, t - p))
    return out


def dataset_counts(d: Dataset) -> LabelCounts:
    if d.labels is None:
        raise DataError("dataset is unlabeled")
    p = sum(d.labels)
    return LabelCounts(p, len(d) - p)


def gini_impurity(d: Dataset, split: SplitDescriptor) -> Fraction:
    """Weighted Gini impurity of ``split`` over the labeled dataset ``d``.

    A binary partition is taken against the attribute's full domain.
    """
    if d.labels is None:
        raise DataError("dataset is unlabeled")
    if len(d) == 0:
        raise DataError("empty dataset")
    col = schema_index(d.schema, split.attribute)
    attr = d.schema[col]
    if split.subset is not None:
        for v in split.subset:
            attr.index(v)
    pos, tot = value_counts(d.codes[:, col], d.label_array, len(attr.domain))
    groups = [[attr.index(v) for v in g] for g in split.branches(attr.domain)]
    return weighted_impurity(branch_counts(pos, tot, groups))


# -- closed forms for the conjunctive rule ----------------------------------


def _check_fractions(p: Mapping[str, Fraction]) -> dict[str, Fraction]:
    out = {k: Fraction(v) for k, v in p.items()}
    for k, v in out.items():
        if not 0 <= v <= 1:
            raise DataError(f"fraction for {k!r} outside [0, 1]: {v}")
    return out


def closed_form_conjunctive_impurity(k: str, p: Mapping[str, Fraction]) -> Fraction:
    """Impurity of splitting on attribute ``k`` when the label is the conjunction
    of all attributes being favorable and attributes are independent:

        2 * prod(p) - 2 * p_k * prod_{j != k} p_j**2
    """
    p = _check_fractions(p)
    if k not in p:
        raise DataError(f"unknown attribute {k!r}")
    others = [v for name, v in p.items() if name != k]
    return 2 * math.prod(p.values()) - 2 * p[k] * math.prod(v * v for v in others)


def impurity_difference(o: str, q: str, p: Mapping[str, Fraction]) -> Fraction:
    """``G(o) - G(q)`` in factored form; negative means ``o`` splits first."""
    if o == q:
        raise DataError("attributes must differ")
    p = _check_fractions(p)
    for name in (o, q):
        if name not in p:
            raise DataError(f"unknown attribute {name!r}")
    rest = math.prod(v * v for name, v in p.items() if name not in (o, q))
    return 2 * p[o] * p[q] * rest * (p[o] - p[q])


# -- three-tier salary rule -------------------------------------------------

SPECIES = "species"
LOW = "low"
MEDIUM = "medium"
HIGH = "high"
TIER_SPLITS = (SPECIES, LOW, MEDIUM, HIGH)


def _two_class(weight: Fraction, share: Fraction) -> Fraction:
    return weight * 2 * share * (1 - share)


def tiered_curves(p0, p5, pe) -> dict[str, Fraction]:
    """Impurities of the four root candidates under the three-tier rule.

    ``p0``/``p5`` are the low/medium salary shares (high is the rest), ``pe``
    the advantaged-group share. Keys: ``species`` (the group split) and
    ``low``/``medium``/``high`` (one-vs-rest salary partitions). A partition
    with an empty side reduces to the parent Gini index.
    """
    p0, p5, pe = Fraction(p0), Fraction(p5), Fraction(pe)
    p10 = 1 - p0 - p5
    if min(p0, p5, pe) < 0 or pe > 1 or p10 < 0:
        raise DataError(f"invalid tier fractions p0={p0}, p5={p5}, pe={pe}")

    species = _two_class(pe, 1 - p0) + _two_class(1 - pe, p10)

    def rest(weight: Fraction, positive_mass: Fraction) -> Fraction:
        return _two_class(weight, positive_mass / weight) if weight else Fraction(0)

    # pure branch contributes nothing; the remainder mixes
    low = rest(p5 + p10, p5 * pe + p10)
    high = rest(p0 + p5, p5 * pe)
    medium = _two_class(p5, pe) + rest(p0 + p10, p10)
    return {SPECIES: species, LOW: low, MEDIUM: medium, HIGH: high}


def tiered_multiway_salary(p5, pe) -> Fraction:
    """Impurity of the one-branch-per-tier salary split."""
    return _two_class(Fraction(p5), Fraction(pe))


def theorem3_curves(p0, p5, pe) -> dict[str, Fraction]:
    return tiered_curves(p0, p5, pe)

"""Regulator-side checks: exact group outcome rates and tree placement.

The audit reports facts against a configurable gap threshold; it does not
issue a verdict.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .data import DataError, Dataset, schema_index
from .tree import DecisionTree, importance_report

DEFAULT_GAP_THRESHOLD = Fraction(1, 5)


def group_rates(d: Dataset, attr: str) -> dict[str, tuple[Fraction, int]]:
    """Positive rate and size of every observed value of ``attr``."""
    if d.labels is None:
        raise DataError("dataset is unlabeled")
    j = schema_index(d.schema, attr)
    sizes: dict[str, int] = {}
    pos: dict[str, int] = {}
    for row, y in zip(d.rows, d.labels):
        sizes[row[j]] = sizes.get(row[j], 0) + 1
        pos[row[j]] = pos.get(row[j], 0) + y
    domain = d.schema[j].domain
    return {v: (Fraction(pos[v], sizes[v]), sizes[v]) for v in domain if v in sizes}


@dataclass
class AuditReport:
    gap_threshold: Fraction
    rates: dict[str, dict[str, tuple[Fraction, int]]] = field(default_factory=dict)
    gaps: dict[str, Fraction] = field(default_factory=dict)
    zero_positive: list[tuple[str, str]] = field(default_factory=list)
    gap_exceeded: list[str] = field(default_factory=list)
    importance: dict[str, tuple[int, int]] | None = None
    discrepancies: list[str] = field(default_factory=list)

    @property
    def flagged(self) -> bool:
        return bool(self.zero_positive or self.gap_exceeded or self.discrepancies)

    def to_dict(self) -> dict:
        out: dict = {"gap_threshold": str(self.gap_threshold)}
        if self.rates:
            out["groups"] = {
                a: {v: {"rate": str(r), "rate_decimal": f"{float(r):.6f}", "size": n}
                    for v, (r, n) in vals.items()}
                for a, vals in self.rates.items()
            }
            out["rate_gaps"] = {a: str(g) for a, g in self.gaps.items()}
        out["flags"] = {
            "zero_positive": [{"attribute": a, "value": v} for a, v in self.zero_positive],
            "rate_gap": self.gap_exceeded,
        }
        if self.importance is not None:
            out["tree"] = {a: {"min_depth": dep, "decisive_count": cnt}
                           for a, (dep, cnt) in self.importance.items()}
        out["discrepancies"] = self.discrepancies
        out["flagged"] = self.flagged
        return out

    def to_text(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["attribute", "value", "size", "positive_rate", "zero_positive",
                    "rate_gap", "gap_flag", "min_depth", "decisive_count"])
        zero = set(self.zero_positive)
        imp = self.importance or {}
        for attr, vals in self.rates.items():
            dep, cnt = imp.get(attr, (None, None))
            for v, (r, n) in vals.items():
                w.writerow([attr, v, n, f"{float(r):.6f}", int((attr, v) in zero),
                            f"{float(self.gaps[attr]):.6f}", int(attr in self.gap_exceeded),
                            "" if dep is None else dep, "" if cnt is None else cnt])
        if not self.rates:
            for attr, (dep, cnt) in imp.items():
                w.writerow([attr, "", "", "", "", "", "", dep, cnt])
        return buf.getvalue()


def _sensitive(d: Dataset | None, t: DecisionTree | None) -> list[str]:
    schema = d.schema if d is not None else t.schema
    return [a.name for a in schema if a.sensitive]


def audit(d: Dataset | None = None, t: DecisionTree | None = None,
          gap_threshold: Fraction = DEFAULT_GAP_THRESHOLD) -> AuditReport:
    """Audit a labeled dataset, a surrogate tree, or both.

    Flags every sensitive group with a positive rate of exactly zero, and every
    sensitive attribute whose largest rate gap reaches ``gap_threshold``. With
    both inputs, a sensitive attribute that has such a gap but is not asked at
    the root (or not asked at all) gets a discrepancy note.
    """
    if d is None and t is None:
        raise DataError("nothing to audit: give a dataset, a tree or both")
    gap_threshold = Fraction(gap_threshold)
    sensitive = _sensitive(d, t)
    if not sensitive:
        raise DataError("no sensitive attribute declared in the schema")
    rep = AuditReport(gap_threshold)
    if d is not None:
        for attr in sensitive:
            rates = group_rates(d, attr)
            rep.rates[attr] = rates
            values = [r for r, _ in rates.values()]
            rep.gaps[attr] = max(values) - min(values)
            rep.zero_positive.extend((attr, v) for v, (r, n) in rates.items() if r == 0 and n >= 1)
            if rep.gaps[attr] >= gap_threshold:
                rep.gap_exceeded.append(attr)
    if t is not None:
        rep.importance = importance_report(t)
        if d is not None:
            for attr in rep.gap_exceeded:
                placed = rep.importance.get(attr)
                if placed is None:
                    rep.discrepancies.append(
                        f"{attr}: rate gap {rep.gaps[attr]} >= {gap_threshold} "
                        f"but the tree never asks about it")
                elif placed[0] > 1:
                    rep.discrepancies.append(
                        f"{attr}: rate gap {rep.gaps[attr]} >= {gap_threshold} "
                        f"but first asked at depth {placed[0]} "
                        f"(decisive for {placed[1]} rows)")
    return rep

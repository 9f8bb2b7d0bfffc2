"""Greedy top-down CART induction with the Gini criterion.

Ties between candidate splits are broken deterministically: schema order of
the attribute first, then (binary mode) the lexicographically smallest tested
subset in domain order. Leaves predict the majority class; an even split
predicts the negative class, and an empty branch inherits its parent's class.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

import numpy as np

from .data import AttributeSpec, DataError, Dataset, Schema, dump_schema
from .gini import (BINARY, MULTIWAY, LabelCounts, SplitDescriptor, branch_counts,
                   gini_index, value_counts, weighted_impurity)

FORMAT_NAME = "giniforge-tree"
FORMAT_VERSION = 1
FULL_ENUMERATION_MAX_ARITY = 8


@dataclass(frozen=True)
class StoppingPolicy:
    """When to stop growing.

    ``max_depth`` bounds the depth of question nodes (root = 1), so leaves can
    sit at ``max_depth + 1``. A node is only split if it holds at least
    ``min_node_size`` rows. Running out of attributes always stops.
    """

    max_depth: int | None = None
    min_node_size: int = 1
    stop_on_pure: bool = True

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be a positive integer")
        if self.min_node_size < 1:
            raise ValueError("min_node_size must be a positive integer")


@dataclass(frozen=True)
class Node:
    depth: int
    counts: LabelCounts
    label: int
    split: SplitDescriptor | None = None
    branches: tuple[tuple[str, ...], ...] = ()
    children: tuple["Node", ...] = ()
    impurity: Fraction | None = None

    @property
    def n_samples(self) -> int:
        return self.counts.total

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    def walk(self) -> Iterator["Node"]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class DecisionTree:
    schema: Schema
    root: Node
    split_mode: str = MULTIWAY
    policy: StoppingPolicy = field(default_factory=StoppingPolicy)

    def nodes(self) -> Iterator[Node]:
        return self.root.walk()

    def leaves(self) -> list[Node]:
        return [n for n in self.nodes() if n.is_leaf]

    @property
    def height(self) -> int:
        return max(n.depth for n in self.nodes())

    def paths(self) -> Iterator[tuple[list[tuple[str, tuple[str, ...]]], Node]]:
        """Yield ``(conditions, leaf)``; each condition is ``(attribute, allowed values)``."""
        def rec(node, conds):
            if node.is_leaf:
                yield conds, node
                return
            for values, child in zip(node.branches, node.children):
                yield from rec(child, conds + [(node.split.attribute, values)])
        yield from rec(self.root, [])


# -- candidate generation ----------------------------------------------------


def _canonical_subsets(values: Sequence[str]) -> list[tuple[str, ...]]:
    """Binary partitions of ``values``, each named by one canonical side.

    One-vs-rest partitions are always included; all 2-partitions are added
    when the arity is small. The canonical side is the smaller one, or the one
    holding the first value when both sides are equally large.
    """
    k = len(values)
    pos = {v: i for i, v in enumerate(values)}

    def canon(side):
        side = tuple(sorted(side, key=pos.__getitem__))
        other = tuple(v for v in values if v not in side)
        if len(other) < len(side) or (len(other) == len(side) and values[0] in other):
            side = other
        return side

    found = {canon((v,)) for v in values}
    if k <= FULL_ENUMERATION_MAX_ARITY:
        for r in range(1, k // 2 + 1):
            for combo in itertools.combinations(values, r):
                found.add(canon(combo))
    return sorted(found, key=lambda s: [pos[v] for v in s])


def candidate_splits(schema: Sequence[AttributeSpec], available: Mapping[str, tuple[str, ...]],
                     split_mode: str) -> list[SplitDescriptor]:
    """Candidates in tie-break order."""
    out = []
    for attr in schema:
        values = available.get(attr.name)
        if values is None or len(values) < 2:
            continue
        if split_mode == MULTIWAY:
            out.append(SplitDescriptor(attr.name))
        else:
            out.extend(SplitDescriptor(attr.name, s) for s in _canonical_subsets(values))
    return out


# -- induction ---------------------------------------------------------------


class _Builder:
    def __init__(self, d: Dataset, policy: StoppingPolicy, split_mode: str):
        self.schema = d.schema
        self.codes = d.codes
        self.labels = d.label_array
        self.policy = policy
        self.mode = split_mode
        self.col = {a.name: i for i, a in enumerate(self.schema)}
        self.index = [{v: i for i, v in enumerate(a.domain)} for a in self.schema]

    def evaluate(self, idx: np.ndarray, split: SplitDescriptor,
                 available: Mapping[str, tuple[str, ...]]):
        c = self.col[split.attribute]
        attr = self.schema[c]
        pos, tot = value_counts(self.codes[idx, c], self.labels[idx], len(attr.domain))
        groups = split.branches(available[split.attribute])
        counts = branch_counts(pos, tot, [[self.index[c][v] for v in g] for g in groups])
        return groups, counts

    def best_split(self, idx, available):
        best = None
        for cand in candidate_splits(self.schema, available, self.mode):
            groups, counts = self.evaluate(idx, cand, available)
            if self.mode == BINARY and any(b.total == 0 for b in counts):
                # a partition with an empty side does not split anything
                continue
            g = weighted_impurity(counts)
            if best is None or g < best[0]:
                best = (g, cand, groups)
        return best

    def grow(self, idx: np.ndarray, depth: int, available: dict[str, tuple[str, ...]],
             fallback: int) -> Node:
        p = int(self.labels[idx].sum()) if len(idx) else 0
        counts = LabelCounts(p, len(idx) - p)
        label = counts.majority if counts.total else fallback
        pol = self.policy
        if (counts.total == 0
                or (pol.stop_on_pure and (counts.positives == 0 or counts.negatives == 0))
                or (pol.max_depth is not None and depth > pol.max_depth)
                or counts.total < pol.min_node_size):
            return Node(depth, counts, label)
        best = self.best_split(idx, available)
        if best is None:
            return Node(depth, counts, label)
        impurity, split, groups = best
        c = self.col[split.attribute]
        col = self.codes[idx, c]
        children = []
        for g in groups:
            mask = np.isin(col, [self.index[c][v] for v in g])
            sub = dict(available)
            if self.mode == MULTIWAY:
                del sub[split.attribute]
            else:
                sub[split.attribute] = g
            children.append(self.grow(idx[mask], depth + 1, sub, label))
        return Node(depth, counts, label, split, tuple(groups), tuple(children), impurity)


def build_tree(d: Dataset, policy: StoppingPolicy | None = None,
               split_mode: str = MULTIWAY) -> DecisionTree:
    """Grow a tree on a labeled dataset by choosing, at every node, the split
    with the lowest exact weighted Gini impurity.

    In ``"multiway"`` mode an attribute gets one branch per domain value and is
    not offered again below. In ``"binary"`` mode every node asks a yes/no
    subset question; an attribute can be asked again on its remaining values.
    """
    policy = policy or StoppingPolicy()
    if split_mode not in (MULTIWAY, BINARY):
        raise ValueError(f"split_mode must be {MULTIWAY!r} or {BINARY!r}")
    if d.labels is None:
        raise DataError("dataset is unlabeled; label it with a black box first")
    if len(d) == 0:
        raise DataError("empty dataset")
    if not d.schema:
        raise DataError("dataset has no attributes")
    builder = _Builder(d, policy, split_mode)
    available = {a.name: a.domain for a in d.schema}
    root = builder.grow(np.arange(len(d)), 1, available, 0)
    return DecisionTree(d.schema, root, split_mode, policy)


# -- queries -----------------------------------------------------------------


def _route(node: Node, value: str) -> Node:
    for values, child in zip(node.branches, node.children):
        if value in values:
            return child
    raise DataError(f"value {value!r} of {node.split.attribute!r} not covered by the tree")


def predict(t: DecisionTree, row: Mapping[str, str] | Sequence[str]) -> int:
    """Label of the leaf reached by ``row`` (a mapping or a schema-ordered sequence)."""
    if not isinstance(row, Mapping):
        if len(row) != len(t.schema):
            raise DataError(f"row has {len(row)} values, schema has {len(t.schema)}")
        row = dict(zip((a.name for a in t.schema), row))
    for attr in t.schema:
        attr.index(str(row[attr.name]))
    node = t.root
    while not node.is_leaf:
        node = _route(node, str(row[node.split.attribute]))
    return node.label


def attribute_depth(t: DecisionTree, attr: str) -> int | None:
    depths = [n.depth for n in t.nodes() if n.split is not None and n.split.attribute == attr]
    return min(depths) if depths else None


def importance_report(t: DecisionTree) -> dict[str, tuple[int, int]]:
    """``attribute -> (minimal depth, rows reaching nodes that ask about it)``."""
    out: dict[str, list[int]] = {}
    for n in t.nodes():
        if n.split is None:
            continue
        entry = out.setdefault(n.split.attribute, [n.depth, 0])
        entry[0] = min(entry[0], n.depth)
        entry[1] += n.n_samples
    order = {a.name: i for i, a in enumerate(t.schema)}
    return {k: tuple(v) for k, v in sorted(out.items(), key=lambda kv: order[kv[0]])}


def attribute_order(t: DecisionTree) -> list[str]:
    """Attributes used by the tree, ordered by first appearance (then schema order)."""
    rep = importance_report(t)
    return sorted(rep, key=lambda a: rep[a][0])


# -- rendering and serialization ------------------------------------------------

CLASS_NAMES = {1: "positive", 0: "negative"}


def _question(t: DecisionTree, node: Node) -> str:
    attr = next(a for a in t.schema if a.name == node.split.attribute)
    if node.split.subset is None:
        return attr.question or f"{attr.name}?"
    return f"{attr.name} in {{{', '.join(node.split.subset)}}}?"


def _edge(node: Node, values: tuple[str, ...]) -> str:
    if node.split.subset is None or len(values) == 1:
        return ", ".join(values)
    return "{" + ", ".join(values) + "}"


def to_dot(t: DecisionTree) -> str:
    lines = ["digraph tree {", '  node [shape=box, fontname="Helvetica"];']
    ids = {}
    for i, n in enumerate(t.nodes()):
        ids[id(n)] = f"n{i}"
    for n in t.nodes():
        nid = ids[id(n)]
        stats = f"n={n.n_samples} [+{n.counts.positives}/-{n.counts.negatives}]"
        if n.is_leaf:
            text = f"{CLASS_NAMES[n.label]}\\n{stats}"
            lines.append(f'  {nid} [label="{_esc(text)}", shape=ellipse];')
        else:
            lines.append(f'  {nid} [label="{_esc(_question(t, n))}\\n{stats}"];')
    for n in t.nodes():
        for values, child in zip(n.branches, n.children):
            lines.append(f'  {ids[id(n)]} -> {ids[id(child)]} [label="{_esc(_edge(n, values))}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _esc(text: str) -> str:
    return text.replace('"', '\\"')


def to_ascii(t: DecisionTree) -> str:
    lines = []

    def rec(node, prefix):
        if node.is_leaf:
            lines.append(f"{prefix}-> {CLASS_NAMES[node.label]} "
                         f"(n={node.n_samples}, +{node.counts.positives}/-{node.counts.negatives})")
            return
        lines.append(f"{prefix}[{node.depth}] {_question(t, node)} (n={node.n_samples})")
        for values, child in zip(node.branches, node.children):
            lines.append(f"{prefix}  = {_edge(node, values)}")
            rec(child, prefix + "    ")

    rec(t.root, "")
    return "\n".join(lines) + "\n"


def schema_hash(schema: Sequence[AttributeSpec]) -> str:
    return hashlib.sha256(dump_schema(schema).encode()).hexdigest()


def _node_to_obj(n: Node) -> dict:
    obj = {
        "depth": n.depth,
        "counts": [n.counts.positives, n.counts.negatives],
        "label": n.label,
    }
    if n.split is not None:
        obj["split"] = {
            "attribute": n.split.attribute,
            "mode": n.split.mode,
            "subset": None if n.split.subset is None else list(n.split.subset),
        }
        obj["impurity"] = str(n.impurity)
        obj["children"] = [{"values": list(v), "node": _node_to_obj(c)}
                           for v, c in zip(n.branches, n.children)]
    return obj


def to_json(t: DecisionTree) -> str:
    obj = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "schema": [a.to_dict() for a in t.schema],
        "schema_hash": schema_hash(t.schema),
        "split_mode": t.split_mode,
        "policy": {
            "max_depth": t.policy.max_depth,
            "min_node_size": t.policy.min_node_size,
            "stop_on_pure": t.policy.stop_on_pure,
        },
        "root": _node_to_obj(t.root),
    }
    return json.dumps(obj, indent=2) + "\n"


def _node_from_obj(obj: Mapping) -> Node:
    counts = LabelCounts(*obj["counts"])
    if "split" not in obj:
        return Node(obj["depth"], counts, obj["label"])
    s = obj["split"]
    split = SplitDescriptor(s["attribute"], None if s["subset"] is None else tuple(s["subset"]))
    branches = tuple(tuple(c["values"]) for c in obj["children"])
    children = tuple(_node_from_obj(c["node"]) for c in obj["children"])
    return Node(obj["depth"], counts, obj["label"], split, branches, children,
                Fraction(obj["impurity"]))


def from_json(text: str) -> DecisionTree:
    obj = json.loads(text)
    if obj.get("format") != FORMAT_NAME:
        raise DataError("not a serialized tree")
    if obj.get("version") != FORMAT_VERSION:
        raise DataError(f"unsupported tree format version {obj.get('version')}")
    schema = tuple(AttributeSpec.from_dict(a) for a in obj["schema"])
    if schema_hash(schema) != obj["schema_hash"]:
        raise DataError("schema hash mismatch")
    pol = obj["policy"]
    policy = StoppingPolicy(pol["max_depth"], pol["min_node_size"], pol["stop_on_pure"])
    return DecisionTree(schema, _node_from_obj(obj["root"]), obj["split_mode"], policy)


EXPORT_FORMATS = ("dot", "ascii", "json")


def export_tree(t: DecisionTree, fmt: str = "dot") -> str:
    if fmt == "dot":
        return to_dot(t)
    if fmt == "ascii":
        return to_ascii(t)
    if fmt == "json":
        return to_json(t)
    raise ValueError(f"unknown export format {fmt!r}; choose from {EXPORT_FORMATS}")


def import_tree(text: str) -> DecisionTree:
    return from_json(text)


def root_gini(t: DecisionTree) -> Fraction:
    return gini_index(t.root.counts)

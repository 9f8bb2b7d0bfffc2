"""Command line entry point: ``giniforge <subcommand> ...``.

Every command is a pure function of its inputs and flags. Each writes a
``*.manifest.json`` next to its outputs recording the resolved configuration
and SHA-256 digests of inputs and outputs, and each output file ends with a
comment (or ``"manifest"`` key for JSON) naming that manifest.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable

from . import __version__
from .adversary import ForgeError, check_fixed_sample, forge_sample, load_request
from .audit import DEFAULT_GAP_THRESHOLD, audit
from .blackbox import label_dataset, load_rule
from .data import DataError, SynthesisSpec, atomic_write, dump_csv, load_csv, load_schema, \
    fraction_favorable, synthesize_independent
from .gini import BINARY, MULTIWAY, TIER_SPLITS
from .theory import difference_surface, predict_order, theorem3_region, verify_theorem1, \
    verify_theorem2, verify_theorem3
from .tree import StoppingPolicy, build_tree, from_json, to_ascii, to_dot, to_json
from .validation import check_unit_fraction, parse_fraction

TIE_RULES = (
    "Ties between equally good splits go to the attribute declared first in the "
    "schema; in binary mode, then to the tested subset that is smallest in domain "
    "order. A leaf with as many positives as negatives predicts 0."
)


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _with_reference(name: str, text: str, manifest_name: str) -> str:
    if name.endswith(".json"):
        obj = json.loads(text)
        obj["manifest"] = manifest_name
        return json.dumps(obj, indent=2) + "\n"
    marker = "//" if name.endswith(".dot") else "#"
    return f"{text}{marker} manifest: {manifest_name}\n"


class Run:
    """Collects inputs and outputs of one command and writes them with a manifest."""

    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = {k: (str(v) if isinstance(v, (Fraction, Path)) else v)
                       for k, v in sorted(config.items()) if k not in ("func",)}
        self.inputs: dict[str, str] = {}
        self.outputs: dict[Path, str] = {}

    def read(self, path: str | None) -> Path | None:
        if path is None:
            return None
        p = Path(path)
        if not p.exists():
            raise DataError(f"no such file: {path}")
        self.inputs[str(path)] = _sha(p)
        return p

    def emit(self, path: Path, text: str) -> None:
        self.outputs[Path(path)] = text

    def commit(self, manifest_path: Path) -> None:
        manifest_path = Path(manifest_path)
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        digests = {}
        for path, text in sorted(self.outputs.items()):
            path.parent.mkdir(parents=True, exist_ok=True)
            body = _with_reference(path.name, text, manifest_path.name)
            atomic_write(path, body)
            digests[path.name] = hashlib.sha256(body.encode()).hexdigest()
        manifest = {
            "tool": "giniforge",
            "version": __version__,
            "subcommand": self.command,
            "config": self.config,
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": digests,
            "seed": None,
        }
        atomic_write(manifest_path, json.dumps(manifest, indent=2) + "\n")


def _manifest_for(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _fraction_arg(text: str) -> Fraction:
    try:
        return parse_fraction(text)
    except DataError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _load_data(run: Run, data: str, schema: str | None):
    sp = run.read(schema)
    dp = run.read(data)
    return load_csv(dp, load_schema(sp) if sp else None)


def _dec(x: Fraction) -> str:
    return f"{float(x):.9f}"


# -- commands --------------------------------------------------------------------


def cmd_synth(args) -> int:
    run = Run("synth", vars(args))
    schema = load_schema(run.read(args.schema))
    with open(run.read(args.spec), encoding="utf-8") as fh:
        spec_obj = json.load(fh)
    targets = {k: check_unit_fraction(v, k) for k, v in spec_obj["fractions"].items()}
    d = synthesize_independent(SynthesisSpec(targets, int(spec_obj["n"])), schema)
    out = Path(args.out)
    run.emit(out, dump_csv(d))
    run.commit(_manifest_for(out))
    return 0


def cmd_label(args) -> int:
    run = Run("label", vars(args))
    d = _load_data(run, args.data, args.schema)
    rule = load_rule(run.read(args.rule), d.schema)
    out = Path(args.out)
    run.emit(out, dump_csv(label_dataset(rule, d.with_labels(None))))
    run.commit(_manifest_for(out))
    return 0


def cmd_train(args) -> int:
    run = Run("train", vars(args))
    d = _load_data(run, args.data, args.schema)
    if not d.is_labeled:
        raise DataError("dataset has no label column; run `giniforge label` first")
    policy = StoppingPolicy(args.max_depth, args.min_node_size, not args.no_stop_on_pure)
    tree = build_tree(d, policy, args.split_mode)
    out = Path(args.out_dir)
    run.emit(out / "tree.dot", to_dot(tree))
    run.emit(out / "tree.txt", to_ascii(tree))
    run.emit(out / "tree.json", to_json(tree))
    run.commit(out / "train.manifest.json")
    return 0


def cmd_predict_order(args) -> int:
    run = Run("predict-order", vars(args))
    if args.data:
        d = _load_data(run, args.data, args.schema)
        fracs = {a.name: fraction_favorable(d, a.name) for a in d.schema if a.favorable}
    else:
        fracs = {}
        for item in args.fraction or []:
            name, _, value = item.partition("=")
            if not value:
                raise DataError(f"expected name=num/den, got {item!r}")
            fracs[name] = check_unit_fraction(value, name)
    if not fracs:
        raise DataError("give --fraction name=num/den or --data with a schema")
    pred = predict_order(fracs)
    report = {
        "fractions": {k: str(v) for k, v in pred.fractions.items()},
        "order": list(pred.order),
        "strict": pred.strict,
        "ties": [list(t) for t in pred.ties],
        "degenerate": list(pred.degenerate),
    }
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        out = Path(args.out)
        run.emit(out, text)
        run.commit(_manifest_for(out))
    else:
        sys.stdout.write(text)
    return 0


def cmd_forge(args) -> int:
    run = Run("forge", vars(args))
    schema = load_schema(run.read(args.schema))
    fixed = load_csv(run.read(args.fixed), schema) if args.fixed else None
    req = load_request(run.read(args.config), schema, fixed)
    out = Path(args.out_dir)
    if fixed is None:
        res = forge_sample(req)
        report, tree, data = res.report(), res.tree, res.dataset
    else:
        rep = check_fixed_sample(req)
        report, tree, data = rep.to_dict(), rep.tree, rep.labeled
    run.emit(out / "report.json", json.dumps(report, indent=2) + "\n")
    if data is not None:
        run.emit(out / "sample.csv", dump_csv(data))
    if tree is not None:
        run.emit(out / "tree.dot", to_dot(tree))
        run.emit(out / "tree.txt", to_ascii(tree))
        run.emit(out / "tree.json", to_json(tree))
    run.commit(out / "forge.manifest.json")
    sys.stdout.write(json.dumps(report, indent=2) + "\n")
    return 0


def cmd_audit(args) -> int:
    run = Run("audit", vars(args))
    d = _load_data(run, args.data, args.schema) if args.data else None
    t = from_json(run.read(args.tree).read_text(encoding="utf-8")) if args.tree else None
    rep = audit(d, t, args.gap_threshold)
    if args.out_dir:
        out = Path(args.out_dir)
        run.emit(out / "audit.json", rep.to_text())
        run.emit(out / "audit.csv", rep.to_csv())
        run.commit(out / "audit.manifest.json")
    sys.stdout.write(rep.to_text())
    return 1 if rep.flagged else 0


def cmd_curves(args) -> int:
    run = Run("curves", vars(args))
    table = theorem3_region(args.p5, args.pe, args.step)
    lines = ["p0," + ",".join(TIER_SPLITS) + ",argmin"]
    for p0, vals, best in table.rows():
        argmin = "|".join(s for s in TIER_SPLITS if s in best)
        lines.append(",".join([_dec(p0)] + [_dec(vals[s]) for s in TIER_SPLITS] + [argmin]))
    out = Path(args.out)
    run.emit(out, "\n".join(lines) + "\n")
    run.commit(_manifest_for(out))
    for i in table.intersections:
        p0 = i.p0 if isinstance(i.p0, Fraction) else f"{i.p0:.6f}"
        g = i.impurity if isinstance(i.impurity, Fraction) else f"{i.impurity:.6f}"
        print(f"{i.pair[0]} = {i.pair[1]} at p0={p0} (impurity {g}){'' if i.exact else ' ~'}")
    return 0


def cmd_surface(args) -> int:
    run = Run("surface", vars(args))
    lines = ["p_e,p_s,delta,sign"]
    for pe, ps, delta, sign in difference_surface(args.step):
        lines.append(f"{_dec(pe)},{_dec(ps)},{_dec(delta)},{sign}")
    out = Path(args.out)
    run.emit(out, "\n".join(lines) + "\n")
    run.commit(_manifest_for(out))
    return 0


F = Fraction

ORDER_GRID = [
    ({"salary": F(5, 10), "species": F(6, 10)}, 10),
    ({"a": F(2, 10), "b": F(3, 10), "c": F(5, 10)}, 100),
    ({"a": F(1, 5), "b": F(2, 5), "c": F(1, 2), "d": F(3, 5)}, 1000),
    ({"a": F(1, 10), "b": F(1, 5), "c": F(3, 10), "d": F(2, 5), "e": F(1, 2)}, 5000),
    ({"d": F(3, 4), "c": F(1, 4), "b": F(1, 2)}, 32),
    ({"a": F(1, 4), "b": F(1, 4)}, 16),
    ({"a": F(1, 2), "b": F(1, 2), "c": F(1, 2)}, 8),
]

LAST_LEVEL_GRID = [
    ({"salary": F(5, 10), "species": F(6, 10)}, "species", 10),
    ({"a": F(1, 5), "b": F(3, 10), "species": F(1, 2)}, "species", 100),
    ({"species": F(1, 2), "a": F(2, 5), "b": F(1, 5), "c": F(3, 10)}, "species", 1000),
    ({"a": F(1, 2), "species": F(1, 2)}, "species", 4),
]


def cmd_verify_theorems(args) -> int:
    run = Run("verify-theorems", vars(args))
    order = [verify_theorem1(p, n).to_dict() for p, n in ORDER_GRID]
    last = [verify_theorem2(p, s, n).to_dict() for p, s, n in LAST_LEVEL_GRID]
    tiers = verify_theorem3(F(1, 2), F(1, 2), args.step).to_dict()
    ok = all(r["ok"] for r in order) and all(r["ok"] for r in last) and tiers["ok"]
    report = {"ordering": order, "last_level": last, "tiers": tiers, "all_ok": ok}
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        out = Path(args.out)
        run.emit(out, text)
        run.commit(_manifest_for(out))
    else:
        sys.stdout.write(text)
    print(f"verify-theorems: {'all checks passed' if ok else 'MISMATCH'}", file=sys.stderr)
    return 0 if ok else 1


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="giniforge",
        description="Exact-Gini surrogate trees: synthesize, label, train, forge and audit.",
        epilog="Fractions are written num/den (e.g. 3/5); decimal input is rejected.",
        formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func: Callable, help: str, epilog: str | None = None):
        p = sub.add_parser(name, help=help, description=help, epilog=epilog, formatter_class=fmt)
        p.set_defaults(func=func)
        return p

    p = add("synth", cmd_synth, "Write an exact-independence sample as CSV.",
            "spec file: JSON {\"n\": 10, \"fractions\": {\"species\": \"6/10\", ...}}; "
            "n must be a multiple of the product of the denominators. "
            "Output: CSV without a label column.")
    p.add_argument("--schema", required=True, help="JSON schema sidecar")
    p.add_argument("--spec", required=True, help="JSON synthesis spec")
    p.add_argument("--out", required=True, help="output CSV")

    p = add("label", cmd_label, "Label a CSV with a declared black-box rule.",
            "rule file: JSON with variant conjunctive | tiered | lookup. "
            "Output: CSV with a trailing label column (1/0).")
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--schema", help="JSON schema sidecar (domains inferred if omitted)")
    p.add_argument("--rule", required=True, help="JSON rule configuration")
    p.add_argument("--out", required=True, help="output CSV")

    p = add("train", cmd_train, "Grow a Gini tree on a labeled CSV.",
            f"{TIE_RULES} Outputs in --out-dir: tree.dot (Graphviz), tree.txt "
            "(ASCII), tree.json (versioned structured text).")
    p.add_argument("--data", required=True, help="labeled CSV")
    p.add_argument("--schema", help="JSON schema sidecar (domains inferred if omitted)")
    p.add_argument("--max-depth", type=int, default=None,
                   help="deepest question level, root = 1 (default: unlimited)")
    p.add_argument("--split-mode", choices=[MULTIWAY, BINARY], default=MULTIWAY,
                   help="one branch per value, or yes/no subset questions")
    p.add_argument("--min-node-size", type=int, default=1, help="smallest node that may split")
    p.add_argument("--no-stop-on-pure", action="store_true",
                   help="keep splitting nodes whose labels all agree")
    p.add_argument("--out-dir", required=True, help="directory for tree files")

    p = add("predict-order", cmd_predict_order,
            "Predict the root-to-leaf attribute order from favorable fractions.",
            "Attributes are ordered by ascending favorable fraction; equal fractions "
            "are reported as ties (schema order applies). Output: JSON.")
    p.add_argument("--fraction", action="append", metavar="NAME=NUM/DEN",
                   help="favorable fraction of one attribute (repeatable)")
    p.add_argument("--data", help="compute fractions from this CSV instead")
    p.add_argument("--schema", help="JSON schema sidecar declaring favorable values")
    p.add_argument("--out", help="write JSON here instead of stdout")

    p = add("forge", cmd_forge,
            "Forge a sample that hides the sensitive attribute at a target depth, "
            "or check an imposed sample.",
            "config file: JSON {\"sensitive\": ..., \"target_depth\": k | \"last\", "
            "\"n\": ..., optional \"rule_attributes\", \"lowest\" (1/10), "
            "\"highest\" (9/10), \"step\" (1/10)}. Outputs in --out-dir: report.json, "
            "sample.csv, tree.dot/.txt/.json.")
    p.add_argument("--schema", required=True, help="JSON schema sidecar")
    p.add_argument("--config", required=True, help="JSON forge request")
    p.add_argument("--fixed", help="imposed unlabeled CSV (feasibility check only)")
    p.add_argument("--out-dir", required=True, help="directory for outputs")

    p = add("audit", cmd_audit, "Audit a labeled dataset and/or a tree for hidden discrimination.",
            "Exit status 1 when any flag fires (zero-positive group, rate gap at or "
            "above the threshold, or a discrepancy between gap and tree depth). "
            "Outputs in --out-dir: audit.json, audit.csv.")
    p.add_argument("--data", help="labeled CSV")
    p.add_argument("--schema", help="JSON schema sidecar with sensitive flags")
    p.add_argument("--tree", help="tree.json produced by `train` or `forge`")
    p.add_argument("--gap-threshold", type=_fraction_arg, default=DEFAULT_GAP_THRESHOLD,
                   help="rate gap that raises a flag")
    p.add_argument("--out-dir", help="directory for audit.json / audit.csv")

    p = add("curves", cmd_curves,
            "Tabulate root-candidate impurities for the three-tier salary rule.",
            "Output CSV columns: p0, species, low, medium, high (decimal renderings of "
            "exact values), argmin (tied splits joined by '|').")
    p.add_argument("--pe", type=_fraction_arg, default=F(1, 2), help="advantaged-group share")
    p.add_argument("--p5", type=_fraction_arg, default=F(1, 2), help="medium-salary share")
    p.add_argument("--step", type=_fraction_arg, default=F(1, 1000), help="grid step for p0")
    p.add_argument("--out", required=True, help="output CSV")

    p = add("surface", cmd_surface,
            "Tabulate G(species) - G(salary) over the unit square.",
            "Output CSV columns: p_e, p_s, delta, sign (positive: salary at the root).")
    p.add_argument("--step", type=_fraction_arg, default=F(1, 100), help="grid step")
    p.add_argument("--out", required=True, help="output CSV")

    p = add("verify-theorems", cmd_verify_theorems,
            "Check the ordering, last-level and three-tier predictions on built-in grids.",
            "Exit status 1 on any mismatch. Output: JSON report.")
    p.add_argument("--step", type=_fraction_arg, default=F(1, 1000),
                   help="grid step for the three-tier curves")
    p.add_argument("--out", help="write JSON here instead of stdout")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, ForgeError, ValueError) as exc:
        print(f"giniforge {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

import csv
import json
from fractions import Fraction

import pytest

from giniforge.cli import main
from giniforge.tree import attribute_depth, from_json


def _rule(tmp_path):
    p = tmp_path / "rule.json"
    p.write_text(json.dumps({"variant": "conjunctive",
                             "favorable": {"species": ["elf"], "salary": ["10"]}}))
    return p


def _spec(tmp_path, fractions, n):
    p = tmp_path / "spec.json"
    p.write_text(json.dumps({"n": n, "fractions": fractions}))
    return p


def _csv_rows(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.reader(lines))


def test_help_lists_subcommands(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for cmd in ("synth", "label", "train", "predict-order", "forge", "audit", "curves",
                "surface", "verify-theorems"):
        assert cmd in out


def test_train_help_states_tie_rules(capsys):
    with pytest.raises(SystemExit):
        main(["train", "--help"])
    assert "declared first" in capsys.readouterr().out


def test_synth_label_train_audit_pipeline(tmp_path, credit_files):
    _, schema = credit_files
    spec = _spec(tmp_path, {"species": "6/10", "salary": "5/10"}, 10)
    raw, labeled, out = tmp_path / "raw.csv", tmp_path / "labeled.csv", tmp_path / "tree"
    assert main(["synth", "--schema", str(schema), "--spec", str(spec), "--out", str(raw)]) == 0
    assert _csv_rows(raw)[0] == ["species", "salary"]
    assert len(_csv_rows(raw)) == 11
    assert (tmp_path / "raw.csv.manifest.json").exists()
    assert main(["label", "--data", str(raw), "--schema", str(schema), "--rule",
                 str(_rule(tmp_path)), "--out", str(labeled)]) == 0
    rows = _csv_rows(labeled)
    assert rows[0][-1] == "label" and sum(int(r[-1]) for r in rows[1:]) == 3
    assert main(["train", "--data", str(labeled), "--schema", str(schema),
                 "--out-dir", str(out)]) == 0
    tree = from_json((out / "tree.json").read_text())
    assert attribute_depth(tree, "salary") == 1 and attribute_depth(tree, "species") == 2
    assert "salary over 10 coins?" in (out / "tree.dot").read_text()
    manifest = json.loads((out / "train.manifest.json").read_text())
    assert manifest["subcommand"] == "train" and manifest["seed"] is None
    assert set(manifest["outputs"]) == {"tree.dot", "tree.txt", "tree.json"}
    code = main(["audit", "--data", str(labeled), "--schema", str(schema),
                 "--tree", str(out / "tree.json"), "--out-dir", str(tmp_path / "audit")])
    assert code == 1
    report = json.loads((tmp_path / "audit" / "audit.json").read_text())
    assert report["flags"]["zero_positive"] == [{"attribute": "species", "value": "ogre"}]


def test_train_stump(tmp_path, credit_files):
    data, schema = credit_files
    assert main(["train", "--data", str(data), "--schema", str(schema), "--max-depth", "1",
                 "--out-dir", str(tmp_path / "t")]) == 0
    tree = from_json((tmp_path / "t" / "tree.json").read_text())
    assert tree.root.split.attribute == "salary"
    assert attribute_depth(tree, "species") is None


def test_train_unlabeled_points_to_label(tmp_path, credit_files, capsys):
    _, schema = credit_files
    p = tmp_path / "u.csv"
    p.write_text("species,salary\nelf,10\nogre,5\n")
    assert main(["train", "--data", str(p), "--out-dir", str(tmp_path / "t")]) == 2
    assert "giniforge label" in capsys.readouterr().err


def test_synth_divisibility_error(tmp_path, credit_files, capsys):
    _, schema = credit_files
    spec = _spec(tmp_path, {"species": "1/3", "salary": "1/2"}, 4)
    assert main(["synth", "--schema", str(schema), "--spec", str(spec),
                 "--out", str(tmp_path / "x.csv")]) == 2
    assert "not divisible by 6" in capsys.readouterr().err


def test_synth_single_attribute(tmp_path):
    schema = tmp_path / "s.json"
    schema.write_text(json.dumps({"attributes": [
        {"name": "a", "domain": ["fav", "unfav"], "favorable": ["fav"]}]}))
    spec = _spec(tmp_path, {"a": "1/2"}, 4)
    assert main(["synth", "--schema", str(schema), "--spec", str(spec),
                 "--out", str(tmp_path / "o.csv")]) == 0
    rows = _csv_rows(tmp_path / "o.csv")
    assert rows[0] == ["a"] and len(rows) == 5


def test_decimal_fraction_rejected(tmp_path):
    with pytest.raises(SystemExit):
        main(["curves", "--pe", "0.5", "--out", str(tmp_path / "c.csv")])


def test_predict_order_cli(capsys):
    assert main(["predict-order", "--fraction", "species=6/10", "--fraction",
                 "salary=5/10"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["order"] == ["salary", "species"] and out["strict"]


def test_curves_argmin_never_species_alone(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert main(["curves", "--pe", "1/2", "--p5", "1/2", "--step", "1/1000",
                 "--out", str(out)]) == 0
    rows = _csv_rows(out)
    assert rows[0] == ["p0", "species", "low", "medium", "high", "argmin"]
    interior = [r for r in rows[1:] if 0 < Fraction(r[0]) < Fraction(1, 2)]
    assert len(interior) == 499
    assert all(r[-1] != "species" for r in interior)
    printed = capsys.readouterr().out
    assert "0.146447" in printed and "0.353553" in printed


def test_surface_diagonal(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["surface", "--step", "1/100", "--out", str(out)]) == 0
    rows = _csv_rows(out)[1:]
    assert len(rows) == 101 * 101
    diag = [r for r in rows if r[0] == r[1]]
    assert len(diag) == 101 and all(float(r[2]) == 0 and r[3] == "0" for r in diag)


def test_forge_cli(tmp_path, credit_files, capsys):
    _, schema = credit_files
    cfg = tmp_path / "forge.json"
    cfg.write_text(json.dumps({"sensitive": "species", "target_depth": "last", "n": 10}))
    assert main(["forge", "--schema", str(schema), "--config", str(cfg),
                 "--out-dir", str(tmp_path / "f")]) == 0
    report = json.loads((tmp_path / "f" / "report.json").read_text())
    assert report["sensitive_depth"] == 2
    assert (tmp_path / "f" / "forge.manifest.json").exists()


def test_forge_fixed_sample_blocked(tmp_path, credit_files):
    _, schema = credit_files
    cfg = tmp_path / "forge.json"
    cfg.write_text(json.dumps({"sensitive": "species"}))
    fixed = tmp_path / "fixed.csv"
    # salary favorable on 3/4 of rows, species on 1/2
    fixed.write_text("species,salary\nelf,10\nelf,10\nogre,10\nogre,5\n")
    assert main(["forge", "--schema", str(schema), "--config", str(cfg), "--fixed", str(fixed),
                 "--out-dir", str(tmp_path / "f")]) == 0
    report = json.loads((tmp_path / "f" / "report.json").read_text())
    assert report["feasible_as_last"] is False
    assert report["blocking_attributes"] == ["salary"]


def test_verify_theorems_exit_zero(tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify-theorems", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["all_ok"] is True


def test_missing_input_file(tmp_path, capsys):
    assert main(["train", "--data", str(tmp_path / "nope.csv"),
                 "--out-dir", str(tmp_path)]) == 2
    assert "no such file" in capsys.readouterr().err

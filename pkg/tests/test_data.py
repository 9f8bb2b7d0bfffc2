import itertools
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from giniforge.data import (AttributeSpec, DataError, Dataset, SynthesisSpec, fraction_favorable,
                            load_csv, load_schema, parse_csv, save_csv, save_schema,
                            synthesize_from_marginals, synthesize_independent)
from giniforge.theory import binary_schema


def test_attribute_spec_invariants():
    with pytest.raises(DataError):
        AttributeSpec("a", ("x", "x"))
    with pytest.raises(DataError):
        AttributeSpec("a", ("x",))
    with pytest.raises(DataError):
        AttributeSpec("a", ("x", "y"), favorable={"z"})


def test_dataset_rejects_bad_rows():
    schema = binary_schema(["a", "b"])
    with pytest.raises(DataError):
        Dataset(schema, (("fav",),))
    with pytest.raises(DataError):
        Dataset(schema, (("fav", "maybe"),))
    with pytest.raises(DataError):
        Dataset(schema, (("fav", "fav"),), (1, 0))


def test_load_credit_csv_with_schema(credit_files):
    csv_path, schema_path = credit_files
    d = load_csv(csv_path, load_schema(schema_path))
    assert len(d) == 10
    assert d.names == ("species", "salary")
    assert set(d.attribute("species").domain) == {"elf", "ogre"}
    assert set(d.attribute("salary").domain) == {"5", "10"}
    assert sum(d.labels) == 3


def test_load_infers_domains_in_first_appearance_order(credit_files):
    d = load_csv(credit_files[0])
    assert d.attribute("salary").domain == ("10", "5")
    assert d.attribute("species").domain == ("elf", "ogre")


def test_header_only_is_an_error(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("species,salary,label\n")
    with pytest.raises(DataError, match="empty dataset"):
        load_csv(p)


def test_empty_file_is_an_error(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("")
    with pytest.raises(DataError, match="empty file"):
        load_csv(p)


def test_malformed_row_length(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("a,b\nx,y\nx\n")
    with pytest.raises(DataError, match="line 3"):
        load_csv(p)


def test_unknown_token_with_schema(tmp_path, credit):
    p = tmp_path / "u.csv"
    p.write_text("species,salary\nelf,10\ndwarf,5\n")
    with pytest.raises(DataError, match="dwarf"):
        load_csv(p, credit.schema)


def test_csv_without_label_column(tmp_path):
    p = tmp_path / "n.csv"
    p.write_text("a,b\nx,y\nz,y\n")
    d = load_csv(p)
    assert d.labels is None


def test_round_trip(tmp_path, credit):
    save_csv(credit, tmp_path / "r.csv")
    assert load_csv(tmp_path / "r.csv", credit.schema) == credit
    unl = credit.with_labels(None)
    save_csv(unl, tmp_path / "u.csv")
    assert (tmp_path / "u.csv").read_text().splitlines()[0] == "species,salary"
    assert load_csv(tmp_path / "u.csv", credit.schema) == unl


def test_save_empty_dataset_errors(tmp_path, credit):
    with pytest.raises(DataError):
        save_csv(Dataset(credit.schema, ()), tmp_path / "x.csv")


def test_schema_round_trip(tmp_path, credit):
    save_schema(credit.schema, tmp_path / "s.json")
    assert load_schema(tmp_path / "s.json") == credit.schema


def test_comment_lines_are_skipped():
    d = parse_csv("a,b\nx,y\nz,y\n# manifest: m.json\n")
    assert len(d) == 2


def test_fraction_favorable(credit):
    assert fraction_favorable(credit, "species") == Fraction(6, 10)
    assert fraction_favorable(credit, "salary") == Fraction(5, 10)
    all_fav = Dataset(binary_schema(["a"]), (("fav",), ("fav",)))
    assert fraction_favorable(all_fav, "a") == 1
    with pytest.raises(DataError):
        fraction_favorable(credit, "colour")


def test_fraction_favorable_needs_favorable_set():
    d = Dataset((AttributeSpec("a", ("x", "y")),), (("x",),))
    with pytest.raises(DataError):
        fraction_favorable(d, "a")


def test_synthesize_credit_composition(credit):
    d = synthesize_independent(SynthesisSpec({"species": Fraction(6, 10), "salary": Fraction(5, 10)}, 10),
                               credit.schema)
    cells = Counter(d.rows)
    # 10 * 6/10 * 5/10 = 3, 10 * 6/10 * 5/10 = 3, 10 * 4/10 * 5/10 = 2, 2
    assert cells == {("elf", "10"): 3, ("elf", "5"): 3, ("ogre", "10"): 2, ("ogre", "5"): 2}
    assert Counter(d.rows) == Counter(credit.rows)


def test_synthesize_single_attribute():
    d = synthesize_independent(SynthesisSpec({"a": Fraction(1, 2)}, 2), binary_schema(["a"]))
    assert sorted(d.rows) == [("fav",), ("unfav",)]


def test_synthesize_divisibility_error():
    with pytest.raises(DataError, match="not divisible by 6"):
        SynthesisSpec({"a": Fraction(1, 3), "b": Fraction(1, 2)}, 4)


def test_synthesize_fraction_out_of_range():
    with pytest.raises(DataError):
        SynthesisSpec({"a": Fraction(3, 2)}, 2)


def test_synthesize_multivalued_uses_one_unfavorable_token():
    schema = (AttributeSpec("t", ("lo", "mid", "hi"), favorable={"hi"}),)
    d = synthesize_independent(SynthesisSpec({"t": Fraction(1, 4)}, 4), schema)
    assert Counter(r[0] for r in d.rows) == {"hi": 1, "lo": 3}


def test_marginals_must_sum_to_one():
    with pytest.raises(DataError):
        synthesize_from_marginals(binary_schema(["a"]), {"a": {"fav": Fraction(1, 3)}}, 3)


fractions_st = st.builds(Fraction, st.integers(0, 6), st.just(6)) | st.builds(
    Fraction, st.integers(0, 4), st.just(4))


@settings(max_examples=60, deadline=None)
@given(st.lists(fractions_st, min_size=1, max_size=3), st.integers(1, 3))
def test_synthesized_data_is_exactly_independent(fracs, mult):
    names = [f"a{i}" for i in range(len(fracs))]
    den = 1
    for f in fracs:
        den *= f.denominator
    n = den * mult
    d = synthesize_independent(SynthesisSpec(dict(zip(names, fracs)), n), binary_schema(names))
    assert len(d) == n
    for name, f in zip(names, fracs):
        assert fraction_favorable(d, name) == f
        assert n % fraction_favorable(d, name).denominator == 0
    for a, b in itertools.permutations(names, 2):
        ja, jb = names.index(a), names.index(b)
        sub = [r for r in d.rows if r[ja] == "fav"]
        if sub:
            cond = Fraction(sum(r[jb] == "fav" for r in sub), len(sub))
            assert cond == fraction_favorable(d, b)

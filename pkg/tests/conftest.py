from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from giniforge.data import AttributeSpec, Dataset, save_csv, save_schema
from giniforge.datasets import creditworthiness


@pytest.fixture
def credit():
    return creditworthiness()


@pytest.fixture
def credit_files(tmp_path, credit):
    save_csv(credit, tmp_path / "credit.csv")
    save_schema(credit.schema, tmp_path / "schema.json")
    return tmp_path / "credit.csv", tmp_path / "schema.json"


def brute_gini(labels):
    """1 - sum of squared label shares, straight from the definition."""
    n = len(labels)
    return 1 - sum(Fraction(c, n) ** 2 for c in Counter(labels).values())


def brute_impurity(rows, labels, column, groups):
    """Weighted Gini of a split given as value groups, by direct enumeration."""
    n = len(rows)
    total = Fraction(0)
    for g in groups:
        sub = [y for r, y in zip(rows, labels) if r[column] in g]
        if sub:
            total += Fraction(len(sub), n) * brute_gini(sub)
    return total


@st.composite
def labeled_datasets(draw, max_attrs=3, max_values=4, max_rows=30):
    k = draw(st.integers(1, max_attrs))
    schema = tuple(
        AttributeSpec(f"a{i}", tuple(f"v{j}" for j in range(draw(st.integers(2, max_values)))),
                      favorable={"v0"})
        for i in range(k)
    )
    n = draw(st.integers(1, max_rows))
    rows = [tuple(draw(st.sampled_from(a.domain)) for a in schema) for _ in range(n)]
    labels = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    return Dataset(schema, tuple(rows), tuple(labels))


acceptance_key = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.stash.setdefault(acceptance_key, {})

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        lines[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(acceptance_key, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])

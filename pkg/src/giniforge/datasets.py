"""Small reference datasets from the elves-and-ogres credit scenario."""

from __future__ import annotations

from fractions import Fraction

from .data import AttributeSpec, Dataset, synthesize_from_marginals


def creditworthiness_schema() -> tuple[AttributeSpec, ...]:
    return (
        AttributeSpec("species", ("elf", "ogre"), favorable={"elf"}, sensitive=True,
                      question="species is elf?"),
        AttributeSpec("salary", ("5", "10"), favorable={"10"}, ordered=True,
                      question="salary over 10 coins?"),
    )


def creditworthiness() -> Dataset:
    """Ten creatures: six elves (three earning 10 coins), four ogres (two earning 10).

    Only elves earning 10 coins are labeled creditworthy.
    """
    rows = (
        [("elf", "10")] * 3 + [("elf", "5")] * 3
        + [("ogre", "10")] * 2 + [("ogre", "5")] * 2
    )
    labels = [1] * 3 + [0] * 7
    return Dataset(creditworthiness_schema(), tuple(rows), tuple(labels))


def tiered_schema() -> tuple[AttributeSpec, ...]:
    return (
        AttributeSpec("species", ("elf", "ogre"), favorable={"elf"}, sensitive=True),
        AttributeSpec("salary", ("0", "5", "10"), favorable={"10"}, ordered=True),
    )


def tiered_sample(p0: Fraction, p5: Fraction, pe: Fraction, n: int) -> Dataset:
    """Unlabeled exact-independence sample for the three-tier salary scenario."""
    p0, p5, pe = Fraction(p0), Fraction(p5), Fraction(pe)
    marginals = {
        "species": {"elf": pe, "ogre": 1 - pe},
        "salary": {"0": p0, "5": p5, "10": 1 - p0 - p5},
    }
    return synthesize_from_marginals(tiered_schema(), marginals, n)

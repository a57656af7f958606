"""Shared helpers: random models for property and agreement tests."""

from fractions import Fraction

from paragodel.algebra import Pair
from paragodel.kripke import KripkeModel

VAR_NAMES = ("p", "q", "r")


def random_crisp_model(rng, max_worlds=3, var_names=VAR_NAMES, denominator=6):
    k = rng.randint(1, max_worlds)
    worlds = [f"w{i}" for i in range(k)]
    relation = [(a, b) for a in worlds for b in worlds if rng.random() < 0.45]
    valuation = {
        (w, v): Pair(
            Fraction(rng.randint(0, denominator), denominator),
            Fraction(rng.randint(0, denominator), denominator),
        )
        for w in worlds
        for v in var_names
    }
    return KripkeModel(worlds, relation=relation, valuation=valuation)


def random_fuzzy_model(rng, max_worlds=3, var_names=VAR_NAMES, denominator=6):
    k = rng.randint(1, max_worlds)
    worlds = [f"w{i}" for i in range(k)]
    weights = {}
    for a in worlds:
        for b in worlds:
            if rng.random() < 0.6:
                num = rng.randint(1, denominator)
                weights[(a, b)] = Fraction(num, denominator)
    valuation = {
        (w, v): Pair(
            Fraction(rng.randint(0, denominator), denominator),
            Fraction(rng.randint(0, denominator), denominator),
        )
        for w in worlds
        for v in var_names
    }
    return KripkeModel(worlds, fuzzy_relation=weights, valuation=valuation)

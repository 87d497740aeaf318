import itertools
from fractions import Fraction

import pytest

from tensorpad.canonical import (canonicalise, mono_term_group, perm_parity,
                                 sort_factors, tableau_mono_term_group)
from tensorpad.expr import Expression, equal_subtree
from tensorpad.indices import classify_indices, index_set_of, rename_dummies
from tensorpad.notation import parse, print_tex
from tensorpad.properties import (ANTICOMMUTING, ANTISYMMETRIC, Pattern,
                                  PropertyRegistry, RIEMANN, SORT_ORDER,
                                  SYMMETRIC, make_record)


def base_reg():
    reg = PropertyRegistry()
    reg = reg.declare(
        [Pattern(x) for x in "mnpqrs"] + [Pattern("z", family=True)],
        make_record("Indices", {"set": "vector"}))
    reg = reg.declare([Pattern("R", index_count=4)], make_record(RIEMANN))
    reg = reg.declare([Pattern("S", index_count=2)], make_record(SYMMETRIC))
    reg = reg.declare([Pattern("F", index_count=2)], make_record(ANTISYMMETRIC))
    return reg


def canon(text, reg=None):
    reg = reg or base_reg()
    return print_tex(canonicalise(parse(text), reg))


def test_riemann_mono_term_group_order():
    reg = base_reg()
    group = mono_term_group(reg, parse("R_{m n p q}").root, 4)
    assert len(group) == 8
    assert (tuple(range(4)), 1) in group


def test_single_antisymmetry():
    assert canon("R_{n m p q}") == "-R_{m n p q}"


def test_pair_exchange():
    assert canon("R_{p q m n}") == "R_{m n p q}"


def test_antisymmetric_trace_vanishes():
    assert canon("R_{m m p q}") == "0"
    assert canon("F_{m m}") == "0"


def test_symmetric_two_slots():
    assert canon("S_{n m}") == "S_{m n}"


def test_scalar_dummy_relabeling():
    assert canon("R_{p q r s} R_{p r q s}") == "R_{m n p q} R_{m p n q}"


def test_identical_factor_exchange():
    assert canon("S_{n p} S_{m n}") == canon("S_{m n} S_{n p}")


def test_deterministic_and_idempotent():
    reg = base_reg()
    e = canonicalise(parse("R_{q s p r} R_{s n r m}"), reg)
    again = canonicalise(e, reg)
    assert equal_subtree(e.root, again.root)


def test_symmetry_sign_invariance():
    reg = base_reg()
    base = canonicalise(parse("R_{m n p q} S_{r s}"), reg)
    flipped = canonicalise(parse("R_{n m p q} S_{s r}"), reg)
    scaled = base.copy()
    scaled.root.multiplier *= -1
    assert equal_subtree(flipped.root, scaled.root)


def brute_force_canonical(term_text, reg):
    """Exhaustive minimum over factor orders x group images x dummy renaming,
    for small terms; the independent oracle for the backtracking search."""
    e = parse(term_text)
    term = e.root
    factors = term.children if term.name == "\\prod" else [term]
    groups = [mono_term_group(reg, f, len(f.script_children())) for f in factors]
    best = None
    for order in itertools.permutations(range(len(factors))):
        names = [factors[i].name for i in order]
        if names != sorted(names):
            continue
        for combo in itertools.product(*[groups[i] for i in order]):
            parts = []
            sign = 1
            for oi, (perm, s) in zip(order, combo):
                f = factors[oi]
                idx = [c.name for c in f.script_children()]
                parts.append(f.name + "_{" + " ".join(idx[p] for p in perm) + "}")
                sign *= s
            cand = " ".join(parts)
            node = rename_dummies(parse(cand).root, reg)
            key = print_tex(Expression(node))
            if best is None or key < best[0]:
                best = (key, sign)
            elif key == best[0] and sign != best[1]:
                return "0"
    if best is None:
        return "0"
    prefix = {1: "", -1: "-"}[best[1] * (1 if term.multiplier > 0 else -1)]
    return prefix + best[0]


@pytest.mark.parametrize("text", [
    "R_{q s p r}",
    "R_{s n r m} R_{q s p r}",
    "S_{n m} S_{p n}",
    "F_{n m} S_{n p}",
    "T_{m n} T_{n m}",
    "R_{m n p q} S_{q p}",
])
def test_against_brute_force(text):
    reg = base_reg()
    assert canon(text, reg) == brute_force_canonical(text, reg)


def test_noncommuting_factors_keep_order():
    reg = base_reg()
    reg = reg.declare([Pattern("\\lambda"), Pattern("\\gamma", wildcard=True)],
                      make_record("NonCommuting"))
    e = canonicalise(parse("\\lambda \\gamma_{m n}"), reg)
    assert [c.name for c in e.root.children] == ["\\lambda", "\\gamma"]


def test_sort_factors_signs():
    reg = PropertyRegistry()
    reg = reg.declare([Pattern("\\epsilon"), Pattern("\\lambda")],
                      make_record(SORT_ORDER))
    reg = reg.declare([Pattern("\\epsilon"), Pattern("\\lambda")],
                      make_record(ANTICOMMUTING))
    factors = parse("\\lambda \\epsilon").root.children
    ordered, sign = sort_factors(list(factors), reg)
    assert [f.name for f in ordered] == ["\\epsilon", "\\lambda"]
    assert sign == -1


def test_tableau_column_group_three_form():
    group = tableau_mono_term_group((1, 1, 1), ((0,), (1,), (2,)), 3)
    assert len(group) == 6
    assert dict(group)[(1, 0, 2)] == -1
    assert dict(group)[(2, 0, 1)] == 1


def test_perm_parity():
    assert perm_parity((0, 1, 2)) == 1
    assert perm_parity((1, 0, 2)) == -1
    assert perm_parity((2, 0, 1)) == 1

from fractions import Fraction

from tensorpad.expr import (Expression, ExprNode, ParentRel, equal_subtree,
                            normalize, number, zero)
from tensorpad.notation import parse, print_tex


def test_sum_flattening():
    e = parse("a + (b + c)")
    assert e.root.name == "\\sum"
    assert [c.name for c in e.root.children] == ["a", "b", "c"]


def test_multiplier_product():
    e = parse("2 (3 a)")
    assert e.root.name == "a"
    assert e.root.multiplier == 6


def test_zero_factor_annihilates_product():
    e = parse("0 a b")
    assert e.root.is_zero()


def test_empty_sum_becomes_zero_node():
    e = parse("a - a")
    collected = normalize(e)
    # normalize keeps both terms; collect_terms removes them (separate op)
    assert collected.root.name == "\\sum"
    from tensorpad.algorithms import collect_terms
    assert collect_terms(e).root.is_zero()


def test_normalize_idempotent():
    for text in ["a + 2 b - 1/3 c", "a (b + c) d", "2 (3 a) (b + (c + d))"]:
        once = normalize(parse(text))
        twice = normalize(once)
        assert equal_subtree(once.root, twice.root)


def test_no_nested_sums_or_products_after_normalize():
    e = normalize(parse("a + (b + (c + d))"))
    for n in e.root.walk():
        if n.name == "\\sum":
            assert all(c.name != "\\sum" for c in n.children)
        if n.name == "\\prod":
            assert all(c.name != "\\prod" for c in n.children)


def test_sum_and_product_arity():
    e = normalize(parse("a b + c d e"))
    for n in e.root.walk():
        if n.name in ("\\sum", "\\prod"):
            assert len(n.children) >= 2


def test_equal_subtree_basics():
    a = parse("R_{a b}").root
    b = parse("R_{b a}").root
    assert not equal_subtree(a, b)
    assert equal_subtree(a, parse("R_{a b}").root)


def test_equal_subtree_multiplier_flag():
    two_a = parse("2 a").root
    three_a = parse("3 a").root
    assert not equal_subtree(two_a, three_a)
    assert equal_subtree(two_a, three_a, compare_multiplier=False)


def test_equal_subtree_nested_multipliers_always_compared():
    a = parse("\\partial_{m}(2 f) g").root
    b = parse("\\partial_{m}(3 f) g").root
    assert not equal_subtree(a, b, compare_multiplier=False)


def test_multiplier_lives_on_term_root():
    e = parse("-1/2 a b")
    assert e.root.name == "\\prod"
    assert e.root.multiplier == Fraction(-1, 2)
    assert all(c.multiplier == 1 for c in e.root.children)


def test_equal_subtree_is_equivalence_on_normalized_trees():
    a = normalize(parse("2 x_{m} y + z"))
    b = normalize(parse("2 x_{m}  y + z"))
    c = normalize(parse("2 x_{m} y + z"))
    assert equal_subtree(a.root, a.root)
    assert equal_subtree(a.root, b.root) and equal_subtree(b.root, a.root)
    assert equal_subtree(a.root, b.root) and equal_subtree(b.root, c.root) \
        and equal_subtree(a.root, c.root)

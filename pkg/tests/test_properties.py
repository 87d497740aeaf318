import pytest

from tensorpad.expr import ExprNode
from tensorpad.notation import parse
from tensorpad.properties import (ACCENT, ANTICOMMUTING, DIRACBAR,
                                  DeclarationError, INDEX_INHERIT, KRONECKER,
                                  NONCOMMUTING, Pattern, PropertyRegistry,
                                  RIEMANN, SELF_ANTICOMMUTING, SORT_ORDER,
                                  SYMMETRIC, TABLEAU, make_record, tableau_of)


def reg_with(*decls):
    reg = PropertyRegistry()
    for patterns, record in decls:
        reg = reg.declare(patterns, record)
    return reg


def pat(text):
    return Pattern.from_node(parse(text).root)


def test_riemann_preset_answers_tableau():
    reg = reg_with(([pat("R_{m n p q}")], make_record(RIEMANN)))
    node = parse("R_{a b c d}").root
    rec = reg.query(node, TABLEAU)
    assert rec is not None
    shape, filling = tableau_of(rec)
    assert shape == (2, 2)
    assert filling == ((0, 2), (1, 3))


def test_indexed_pattern_matches_by_index_count():
    reg = reg_with(([pat("R_{m n p q}")], make_record(RIEMANN)))
    assert reg.query(parse("R_{a b}").root, TABLEAU) is None
    assert reg.query(parse("R").root, TABLEAU) is None


def test_contradictory_symmetry_declaration_raises():
    reg = reg_with(([pat("x_{a b}")], make_record(SYMMETRIC)))
    with pytest.raises(DeclarationError):
        reg.declare([pat("x_{a b}")], make_record("AntiSymmetric"))


def test_riemann_then_symmetric_contradicts():
    reg = reg_with(([pat("R_{m n p q}")], make_record(RIEMANN)))
    with pytest.raises(DeclarationError):
        reg.declare([pat("R_{m n p q}")], make_record(SYMMETRIC))


def test_accent_inherits_property():
    reg = reg_with(
        ([pat("\\bar{#}")], make_record(DIRACBAR)),
        ([pat("\\psi")], make_record(SELF_ANTICOMMUTING)),
    )
    barred = parse("\\bar{\\psi}").root
    assert reg.query(barred, SELF_ANTICOMMUTING) is not None


def test_inheritance_through_nested_accents():
    reg = reg_with(
        ([pat("\\bar{#}")], make_record(ACCENT)),
        ([pat("\\hat{#}")], make_record(ACCENT)),
        ([pat("\\psi")], make_record(SELF_ANTICOMMUTING)),
    )
    node = parse("\\bar{\\hat{\\bar{\\psi}}}").root
    assert reg.query(node, SELF_ANTICOMMUTING) is not None


def test_derivative_forwards_anticommutativity():
    reg = reg_with(
        ([pat("\\partial{#}")], make_record("PartialDerivative")),
        ([pat("\\lambda"), pat("\\epsilon")], make_record(ANTICOMMUTING)),
    )
    node = parse("\\partial_{a}{\\lambda}", reg).root
    rec = reg.query(node, ANTICOMMUTING)
    assert rec is not None
    assert any(str(m) == "\\epsilon" for m in rec.list_members)
    assert reg.query(node, INDEX_INHERIT) is not None


def test_undeclared_symbol_has_no_properties():
    reg = PropertyRegistry()
    assert reg.query(parse("x").root, SYMMETRIC) is None


def test_kronecker_pattern_vs_accent_pattern():
    reg = reg_with(
        ([pat("\\delta{#}")], make_record(ACCENT)),
        ([pat("\\delta_{a b}")], make_record(KRONECKER)),
    )
    delta2 = parse("\\delta_{m n}").root
    assert reg.query(delta2, KRONECKER) is not None
    accent_use = parse("\\delta{A_{a}}", reg).root
    assert reg.query(accent_use, KRONECKER) is None


# -- commutation -------------------------------------------------------------

def anticommuting_reg():
    return reg_with(
        ([pat("\\epsilon"), pat("\\lambda")], make_record(ANTICOMMUTING)),
        ([pat("\\lambda")], make_record(SELF_ANTICOMMUTING)),
        ([pat("\\lambda"), pat("\\gamma_{#}")], make_record(NONCOMMUTING)),
        ([pat("\\partial{#}")], make_record("PartialDerivative")),
    )


def test_declared_pair_anticommutes():
    reg = anticommuting_reg()
    a = parse("\\epsilon").root
    b = parse("\\lambda").root
    assert reg.commutation_sign(a, b) == -1
    assert reg.commutation_sign(b, a) == -1


def test_even_number_of_transpositions():
    reg = reg_with(
        ([pat("\\psi1"), pat("\\psi2"), pat("\\psi3")],
         make_record(ANTICOMMUTING)),
    )
    pair = parse("\\psi1 \\psi2").root
    single = parse("\\psi3").root
    assert reg.commutation_sign(pair, single) == 1


def test_noncommuting_is_undefined():
    reg = anticommuting_reg()
    lam = parse("\\lambda").root
    gam = parse("\\gamma_{a}").root
    assert reg.commutation_sign(lam, gam) is None


def test_self_anticommuting():
    reg = anticommuting_reg()
    lam = parse("\\lambda").root
    assert reg.commutation_sign(lam, lam) == -1


def test_derivative_carries_parity_of_argument():
    reg = anticommuting_reg()
    dlam = parse("\\partial_{a}{\\lambda}", reg).root
    eps = parse("\\epsilon").root
    assert reg.commutation_sign(dlam, eps) == -1


def test_plain_symbols_commute():
    reg = PropertyRegistry()
    assert reg.commutation_sign(parse("a").root, parse("b").root) == 1


def test_parity_composition():
    reg = anticommuting_reg()
    eps = parse("\\epsilon").root
    lam = parse("\\lambda").root
    prod = parse("\\epsilon \\lambda").root
    sa = reg.commutation_sign(eps, lam)
    sb = reg.commutation_sign(lam, lam)
    assert reg.commutation_sign(prod, lam) == sa * sb


def test_sort_order_overlap_warns():
    reg = reg_with(
        ([pat("a"), pat("b")], make_record(SORT_ORDER)),
    )
    reg = reg.declare([pat("b"), pat("c")], make_record(SORT_ORDER))
    assert any("SortOrder" in w for w in reg.warnings)

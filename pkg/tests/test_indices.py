import pytest

from tensorpad.expr import equal_subtree
from tensorpad.indices import (IndexError_, IndexSet, all_index_names,
                               classify_indices, fresh_dummy, index_iterator,
                               index_set_of, index_sets, relabel_on_insert,
                               rename_dummies)
from tensorpad.notation import parse, print_tex
from tensorpad.properties import (NON_INDEX, Pattern, PropertyRegistry,
                                  make_record)


def vector_reg(*extra):
    reg = PropertyRegistry()
    reg = reg.declare(
        [Pattern("m"), Pattern("n"), Pattern("p"), Pattern("q", family=True)],
        make_record("Indices", {"set": "vector"}))
    for patterns, record in extra:
        reg = reg.declare(patterns, record)
    return reg


def deriv_reg():
    return vector_reg(([Pattern("\\partial", wildcard=True)],
                       make_record("Derivative")))


def test_index_sets_built_from_declarations():
    reg = vector_reg()
    sets = index_sets(reg)
    assert len(sets) == 1
    vec = sets[0]
    assert vec.members == ["m", "n", "p"]
    assert vec.generator == "q"
    assert index_set_of(reg, "q17") is vec
    assert index_set_of(reg, "x") is None


def test_dimension_from_integer_range():
    reg = vector_reg(([Pattern("m"), Pattern("n"), Pattern("p")],
                      make_record("Integer", {"range": (0, 9)})))
    assert index_sets(reg)[0].dimension == 10


def test_index_iterator_order_through_derivative():
    reg = deriv_reg()
    e = parse("\\int d^nx \\partial_{\\lambda} ( F_{\\mu\\nu\\rho} \\psi^{\\mu} ) \\psi^{\\nu}", reg)
    integrand = e.root.children[1]
    deriv = integrand.children[0]
    assert deriv.name == "\\partial"
    names = [n.name for n in index_iterator(deriv, reg)]
    assert names == ["\\mu", "\\nu", "\\rho", "\\mu", "\\lambda"]


def test_non_index_superscript_excluded():
    reg = PropertyRegistry().declare([Pattern("\\dagger")],
                                     make_record(NON_INDEX))
    node = parse("A^{\\dagger}").root
    assert list(index_iterator(node, reg)) == []


def test_plain_scalar_yields_nothing():
    assert list(index_iterator(parse("x").root, PropertyRegistry())) == []


def test_classification_of_integrand():
    reg = deriv_reg()
    e = parse("\\partial_{\\lambda} ( F_{\\mu\\nu\\rho} \\psi^{\\mu} ) \\psi^{\\nu}", reg)
    cls = classify_indices(e.root, reg)
    assert sorted(cls.free_names()) == ["\\lambda", "\\rho"]
    assert sorted(cls.dummy_names()) == ["\\mu", "\\nu"]


def test_double_subscript_is_dummy():
    reg = vector_reg()
    cls = classify_indices(parse("T_{m m}").root, reg)
    assert cls.dummy_names() == ["m"]
    assert cls.free == []


def test_triple_occurrence_is_error():
    reg = vector_reg()
    with pytest.raises(IndexError_) as err:
        classify_indices(parse("T_{m} S_{m} R_{m}").root, reg)
    assert "'m'" in str(err.value)


def test_sum_with_mismatched_free_indices_rejected():
    reg = deriv_reg()
    e = parse("\\partial_{m} ( B_{n} + C_{n p} ) X_{m n p}", reg)
    with pytest.raises(IndexError_):
        classify_indices(e.root, reg)


def test_fresh_dummy_order():
    iset = IndexSet("vector", ["m", "n", "p"], generator="q")
    assert fresh_dummy(iset, {"m", "n"}) == "p"
    assert fresh_dummy(iset, {"m", "n", "p", "q1"}) == "q2"


def test_fresh_dummy_exhausted_without_generator():
    iset = IndexSet("flat", ["a", "b"])
    with pytest.raises(IndexError_) as err:
        fresh_dummy(iset, {"a", "b"})
    assert "flat" in str(err.value)


def test_relabel_on_insert_renames_clashes_only():
    reg = vector_reg()
    host = parse("B_{m n} B_{m n} X").root
    inserted = parse("T_{m p} T_{m p}").root
    out = relabel_on_insert(host, inserted, reg)
    # m clashes -> renamed; p clashes? p unused in host -> kept
    names = sorted(all_index_names(out, reg))
    assert "p" in names
    assert "m" not in names


def test_relabel_into_empty_host_is_identity():
    reg = vector_reg()
    inserted = parse("T_{m n} T_{m n}").root
    out = relabel_on_insert(None, inserted, reg)
    assert equal_subtree(out, inserted)


def test_relabel_preserves_contraction_topology():
    reg = vector_reg()
    host = parse("A_{m} A_{n} A_{p} A_{q1}").root
    inserted = parse("T_{m n} S_{n p} U_{p m}").root
    out = relabel_on_insert(host, inserted, reg)
    cls_in = classify_indices(inserted, reg)
    cls_out = classify_indices(out, reg)
    pairs_in = sorted(pos for _n, pos in cls_in.dummy)
    pairs_out = sorted(pos for _n, pos in cls_out.dummy)
    assert pairs_in == pairs_out


def test_rename_dummies_minimal_form():
    from tensorpad.expr import Expression
    reg = vector_reg()
    term = parse("T_{q3 q5} T_{q3 q5}").root
    out = rename_dummies(term, reg)
    assert print_tex(Expression(out)) == "T_{m n} T_{m n}"


def test_rename_dummies_idempotent():
    reg = vector_reg()
    term = parse("T_{m n} T_{m n}").root
    once = rename_dummies(term, reg)
    twice = rename_dummies(once, reg)
    assert equal_subtree(once, twice)


def test_rename_dummies_skips_free_names():
    reg = vector_reg()
    term = parse("S_{m} T_{q2 q3} T_{q2 q3}").root
    out = rename_dummies(term, reg)
    cls = classify_indices(out, reg)
    assert cls.free_names() == ["m"]
    assert sorted(cls.dummy_names()) == ["n", "p"]

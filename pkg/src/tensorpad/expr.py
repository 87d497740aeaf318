"""Expression trees: ordered nodes with names, exact-rational multipliers and
parent relations.

Every value in the system is an :class:`Expression` wrapping a tree of
:class:`ExprNode`.  Sums, products, integrals and lists are ordinary nodes
with the reserved names below; everything else (tensors, indices, derivatives,
accents) is a generic named node whose meaning comes from the property
registry, not from the tree itself.
"""

from __future__ import annotations

import enum
from fractions import Fraction
from typing import Iterator

# Exact arbitrary-precision rationals; Fraction keeps them reduced with a
# positive denominator by construction.
Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)

# Reserved structural names.
SUM = "\\sum"
PROD = "\\prod"
INT = "\\int"
LIST = "\\list"
ARROW = "\\arrow"    # substitution rule: lhs -> rhs
SPLICE = "\\splice"  # @(label) placeholder, resolved by the session
MEASURE = "\\measure"  # d^nx marker inside \int; inert

# Numeric literals are nodes named "1" carrying the value in the multiplier.
NUMBER = "1"


class ParentRel(enum.Enum):
    """How a child node hangs off its parent."""

    SUPER = "^"
    SUB = "_"
    ARG = "arg"
    NONE = "none"


class ExprNode:
    __slots__ = ("name", "multiplier", "parent_rel", "children")

    def __init__(self, name, multiplier=ONE, parent_rel=ParentRel.NONE, children=None):
        self.name = name
        self.multiplier = Fraction(multiplier)
        self.parent_rel = parent_rel
        self.children: list[ExprNode] = list(children) if children else []

    def copy(self) -> "ExprNode":
        return ExprNode(self.name, self.multiplier, self.parent_rel,
                        [c.copy() for c in self.children])

    def walk(self) -> Iterator["ExprNode"]:
        """Pre-order traversal of this subtree."""
        yield self
        for c in self.children:
            yield from c.walk()

    def sub_children(self) -> list["ExprNode"]:
        return [c for c in self.children if c.parent_rel is ParentRel.SUB]

    def super_children(self) -> list["ExprNode"]:
        return [c for c in self.children if c.parent_rel is ParentRel.SUPER]

    def script_children(self) -> list["ExprNode"]:
        return [c for c in self.children
                if c.parent_rel in (ParentRel.SUB, ParentRel.SUPER)]

    def arg_children(self) -> list["ExprNode"]:
        return [c for c in self.children if c.parent_rel is ParentRel.ARG]

    def is_number(self) -> bool:
        return self.name == NUMBER and not self.children

    def is_zero(self) -> bool:
        return self.is_number() and self.multiplier == 0

    def __repr__(self):
        # Debug form only; user-facing output goes through notation.print_tex.
        m = "" if self.multiplier == 1 else f"{self.multiplier}*"
        if not self.children:
            return f"{m}{self.name}"
        inner = ", ".join(f"{c.parent_rel.value}:{c!r}" for c in self.children)
        return f"{m}{self.name}[{inner}]"


def number(value) -> ExprNode:
    return ExprNode(NUMBER, Fraction(value))


def zero() -> ExprNode:
    return number(0)


def node_key(n: ExprNode, with_multiplier: bool = True) -> tuple:
    """Hashable structural key; the root multiplier is included only on request.

    Descendant multipliers always participate: a coefficient buried inside a
    derivative argument is part of the structure, only the term-root
    coefficient is negotiable.
    """
    return (n.name,
            n.multiplier if with_multiplier else None,
            tuple((c.parent_rel.value, node_key(c)) for c in n.children))


def equal_subtree(a: ExprNode, b: ExprNode, compare_multiplier: bool = True) -> bool:
    """Structural equality of two subtrees.

    The roots' own parent relations are ignored (they describe the edge above,
    not the tree below); child relations are compared.  With
    ``compare_multiplier=False`` the root multipliers may differ.
    """
    if a.name != b.name or len(a.children) != len(b.children):
        return False
    if compare_multiplier and a.multiplier != b.multiplier:
        return False
    for ca, cb in zip(a.children, b.children):
        if ca.parent_rel is not cb.parent_rel:
            return False
        if not equal_subtree(ca, cb, True):
            return False
    return True


class Expression:
    """A rooted expression tree; the universal value of the engine."""

    __slots__ = ("root",)

    def __init__(self, root: ExprNode):
        self.root = root

    def copy(self) -> "Expression":
        return Expression(self.root.copy())

    def terms(self) -> list[ExprNode]:
        """Top-level terms: the sum's children, or the root itself."""
        if self.root.name == SUM:
            return list(self.root.children)
        return [self.root]

    def factors_of(self, term: ExprNode) -> list[ExprNode]:
        if term.name == PROD:
            return list(term.children)
        return [term]

    def __eq__(self, other):
        return isinstance(other, Expression) and equal_subtree(self.root, other.root)

    def __hash__(self):
        return hash(node_key(self.root))

    def __repr__(self):
        return f"Expression({self.root!r})"


def _normalize_node(n: ExprNode) -> ExprNode:
    for i, c in enumerate(n.children):
        n.children[i] = _normalize_node(c)

    if n.name == PROD:
        mult = n.multiplier
        flat: list[ExprNode] = []
        for c in n.children:
            mult *= c.multiplier
            c.multiplier = ONE
            if c.name == PROD:
                for gc in c.children:
                    gc.parent_rel = ParentRel.ARG
                    flat.append(gc)
            elif c.is_number():
                continue
            else:
                flat.append(c)
        if mult == 0:
            return ExprNode(NUMBER, ZERO, n.parent_rel)
        if not flat:
            return ExprNode(NUMBER, mult, n.parent_rel)
        if len(flat) == 1:
            only = flat[0]
            only.parent_rel = n.parent_rel
            if only.name == SUM:
                for gc in only.children:
                    gc.multiplier *= mult
                only.multiplier = ONE
                return _normalize_node(only)
            only.multiplier = mult
            return only
        n.children = flat
        n.multiplier = mult
        return n

    if n.name == INT:
        for c in n.children:
            if c.name != MEASURE:
                if c.is_zero() or c.multiplier == 0:
                    return ExprNode(NUMBER, ZERO, n.parent_rel)
                n.multiplier *= c.multiplier
                c.multiplier = ONE
        return n

    if n.name == SUM:
        outer = n.multiplier
        flat = []
        for c in n.children:
            c.multiplier *= outer
            if c.name == SUM:
                inner = c.multiplier
                for gc in c.children:
                    gc.multiplier *= inner
                    gc.parent_rel = ParentRel.ARG
                    flat.append(gc)
            else:
                flat.append(c)
        flat = [c for c in flat if c.multiplier != 0]
        if not flat:
            return ExprNode(NUMBER, ZERO, n.parent_rel)
        if len(flat) == 1:
            only = flat[0]
            only.parent_rel = n.parent_rel
            return only
        n.children = flat
        n.multiplier = ONE
        return n

    return n


def normalize(e: Expression) -> Expression:
    """Flatten sums and products, funnel multipliers to term level, drop zero
    terms.  Idempotent; the empty sum becomes the literal 0 node."""
    return Expression(_normalize_node(e.root.copy()))


def normalize_node(n: ExprNode) -> ExprNode:
    return _normalize_node(n.copy())

"""Property system: patterns attach meaning to bare symbols.

A registry maps name patterns to property records.  Queries resolve in three
stages: direct pattern match, inheritance from child nodes (accents and
explicitly inheriting symbols), and computed answers (derivatives forward the
symmetry of their argument; products combine the parity of their factors).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .expr import ExprNode, PROD, SUM, INT

# Property kind names double as the declaration keywords of the input language.
INDICES = "Indices"
INTEGER = "Integer"
SYMMETRIC = "Symmetric"
ANTISYMMETRIC = "AntiSymmetric"
TABLEAU = "TableauSymmetry"
RIEMANN = "RiemannTensor"
WEYL = "WeylTensor"
KRONECKER = "KroneckerDelta"
DERIVATIVE = "Derivative"
PARTIAL_DERIVATIVE = "PartialDerivative"
DEPENDS = "Depends"
ANTICOMMUTING = "AntiCommuting"
SELF_ANTICOMMUTING = "SelfAntiCommuting"
NONCOMMUTING = "NonCommuting"
COMMUTING_AS_PRODUCT = "CommutingAsProduct"
COMMUTING_AS_SUM = "CommutingAsSum"
SORT_ORDER = "SortOrder"
SPINOR = "Spinor"
GAMMA = "GammaMatrix"
ACCENT = "Accent"
DIRACBAR = "DiracBar"
PROPERTY_INHERIT = "PropertyInherit"
INDEX_INHERIT = "IndexInherit"
NON_INDEX = "NonIndex"
POST_DEFAULT_RULES = "PostDefaultRules"

KNOWN_KINDS = frozenset({
    INDICES, INTEGER, SYMMETRIC, ANTISYMMETRIC, TABLEAU, RIEMANN, WEYL,
    KRONECKER, DERIVATIVE, PARTIAL_DERIVATIVE, DEPENDS, ANTICOMMUTING,
    SELF_ANTICOMMUTING, NONCOMMUTING, COMMUTING_AS_PRODUCT, COMMUTING_AS_SUM,
    SORT_ORDER, SPINOR, GAMMA, ACCENT, DIRACBAR, PROPERTY_INHERIT,
    INDEX_INHERIT, NON_INDEX, POST_DEFAULT_RULES,
})

# Kinds where the declared pattern list itself is the payload.
LIST_ATTACHED = frozenset({ANTICOMMUTING, NONCOMMUTING, SORT_ORDER})

_DERIVATIVE_KINDS = (DERIVATIVE, PARTIAL_DERIVATIVE)
_ACCENT_KINDS = (ACCENT, DIRACBAR)

# Only these three may genuinely contradict each other on one symbol.
_SYMMETRY_FAMILY = {SYMMETRIC: SYMMETRIC, ANTISYMMETRIC: ANTISYMMETRIC,
                    TABLEAU: TABLEAU, RIEMANN: TABLEAU, WEYL: TABLEAU}


class DeclarationError(Exception):
    pass


@dataclass(frozen=True)
class Pattern:
    """A name pattern: plain name, generated-name family (q#), or a
    wildcard form matching any child arrangement (\\partial{#})."""

    name: str
    wildcard: bool = False          # name{#}: any children
    family: bool = False            # q#: the names q1, q2, ...
    index_count: int | None = None  # explicit pattern like f_{a b}: two indices

    @classmethod
    def from_node(cls, node: ExprNode) -> "Pattern":
        if node.name.endswith("#") and not node.children:
            return cls(node.name[:-1], family=True)
        if any(c.name == "#" for c in node.children):
            return cls(node.name, wildcard=True)
        if node.children:
            return cls(node.name, index_count=len(node.script_children()))
        return cls(node.name)

    def matches(self, node: ExprNode) -> bool:
        if self.family:
            return bool(re.fullmatch(re.escape(self.name) + r"[1-9][0-9]*",
                                     node.name))
        if node.name != self.name:
            return False
        if self.index_count is not None:
            return len(node.script_children()) == self.index_count
        return True

    def matches_name(self, name: str) -> bool:
        if self.family:
            return bool(re.fullmatch(re.escape(self.name) + r"[1-9][0-9]*", name))
        return name == self.name

    def __str__(self):
        if self.family:
            return self.name + "#"
        if self.wildcard:
            return self.name + "{#}"
        return self.name


@dataclass(frozen=True)
class PropertyRecord:
    kind: str
    args: tuple = ()                    # sorted (key, value) pairs
    list_members: tuple = ()            # Patterns, for list-attached kinds

    def arg(self, key, default=None):
        for k, v in self.args:
            if k == key:
                return v
        return default


def make_record(kind, args=None, list_members=()):
    items = tuple(sorted((args or {}).items()))
    return PropertyRecord(kind, items, tuple(list_members))


def tableau_of(record: PropertyRecord):
    """(shape, filling) of a symmetry record; Riemann/Weyl presets expand to
    the {2,2} tableau whose rows hold slots (0,2) and (1,3)."""
    if record.kind in (RIEMANN, WEYL):
        return (2, 2), ((0, 2), (1, 3))
    if record.kind == TABLEAU:
        shape = record.arg("shape")
        slots = record.arg("indices")
        if shape is None or slots is None:
            raise DeclarationError("TableauSymmetry needs shape= and indices=")
        filling, at = [], 0
        for row_len in shape:
            filling.append(tuple(slots[at:at + row_len]))
            at += row_len
        return tuple(shape), tuple(filling)
    raise ValueError(f"no tableau in {record.kind} record")


class PropertyRegistry:
    """Immutable ordered pattern->record map; declare() returns a new one."""

    __slots__ = ("entries", "warnings", "_index_table")

    def __init__(self, entries=(), warnings=()):
        self.entries: tuple = tuple(entries)
        self.warnings: tuple = tuple(warnings)
        self._index_table = None  # lazily built by the index engine

    def declare(self, patterns, record: PropertyRecord) -> "PropertyRegistry":
        if not patterns:
            raise DeclarationError("property declaration needs at least one pattern")
        patterns = [p if isinstance(p, Pattern) else Pattern.from_node(p)
                    for p in patterns]
        if not record.list_members:
            record = PropertyRecord(record.kind, record.args, tuple(patterns))
        warnings = list(self.warnings)
        fam = _SYMMETRY_FAMILY.get(record.kind)
        for pat in patterns:
            if fam:
                for old_pat, old_rec in self.entries:
                    old_fam = _SYMMETRY_FAMILY.get(old_rec.kind)
                    if old_fam and old_fam != fam and old_pat == pat:
                        raise DeclarationError(
                            f"{pat}::{record.kind} contradicts earlier "
                            f"{old_pat}::{old_rec.kind}")
            if record.kind == SORT_ORDER:
                for old_pat, old_rec in self.entries:
                    if old_rec.kind == SORT_ORDER and pat in old_rec.list_members:
                        warnings.append(
                            f"{pat} appears in more than one SortOrder list")
        new_entries = list(self.entries) + [(p, record) for p in patterns]
        return PropertyRegistry(new_entries, warnings)

    # -- queries ---------------------------------------------------------

    def query(self, node: ExprNode, kind: str) -> PropertyRecord | None:
        rec = self._direct(node, kind)
        if rec is not None:
            return rec
        if kind == INDEX_INHERIT and (self.is_derivative(node) or self.is_accent(node)):
            return make_record(INDEX_INHERIT)
        if self.is_accent(node) or self._direct(node, PROPERTY_INHERIT) is not None:
            for child in node.children:
                rec = self.query(child, kind)
                if rec is not None:
                    return rec
        elif self.is_derivative(node) and kind not in (INDICES, INTEGER, NON_INDEX):
            for child in node.arg_children():
                rec = self.query(child, kind)
                if rec is not None:
                    return rec
        return None

    def _direct(self, node: ExprNode, kind: str) -> PropertyRecord | None:
        found = None
        for pat, rec in self.entries:
            if rec.kind == kind and pat.matches(node):
                found = rec
            elif kind == TABLEAU and rec.kind in (RIEMANN, WEYL) and pat.matches(node):
                found = rec
        return found

    def properties_of(self, node: ExprNode) -> list[PropertyRecord]:
        return [rec for pat, rec in self.entries if pat.matches(node)]

    def is_derivative(self, node: ExprNode) -> bool:
        return any(self._direct(node, k) is not None for k in _DERIVATIVE_KINDS)

    def is_accent(self, node: ExprNode) -> bool:
        return any(self._direct(node, k) is not None for k in _ACCENT_KINDS)

    def is_non_index(self, name: str) -> bool:
        for pat, rec in self.entries:
            if rec.kind == NON_INDEX and pat.matches_name(name):
                return True
        return False

    def inherits_indices(self, node: ExprNode) -> bool:
        return self.query(node, INDEX_INHERIT) is not None

    def sort_order_pos(self, node: ExprNode):
        for n, (pat, rec) in enumerate(self.entries):
            if rec.kind == SORT_ORDER:
                for pos, member in enumerate(rec.list_members):
                    if member.matches(node):
                        return (n, pos)
        return None

    def depends_on(self, node: ExprNode, name: str) -> bool:
        rec = self.query(node, DEPENDS)
        if rec is None:
            return False
        return any(p.matches_name(name) for p in rec.arg("symbols", ()))

    # -- commutation -----------------------------------------------------

    def constituents(self, node: ExprNode) -> list[ExprNode]:
        """Leaf factors seen through products, derivatives and accents;
        the atoms whose declared parities decide commutation."""
        if node.name in (PROD, SUM, INT):
            out = []
            for c in node.children:
                out.extend(self.constituents(c))
            return out
        if self.is_derivative(node) or self.is_accent(node) \
                or self._direct(node, PROPERTY_INHERIT) is not None \
                or self._direct(node, COMMUTING_AS_PRODUCT) is not None:
            out = []
            for c in node.arg_children():
                out.extend(self.constituents(c))
            return out
        return [node]

    def _pair_sign(self, a: ExprNode, b: ExprNode):
        for pat, rec in self.entries:
            if rec.kind == ANTICOMMUTING:
                pa = [m for m in rec.list_members if m.matches(a)]
                pb = [m for m in rec.list_members if m.matches(b)]
                if pa and pb and (pa[0] != pb[0] or a.name != b.name):
                    return -1
            elif rec.kind == SELF_ANTICOMMUTING and a.name == b.name \
                    and pat.matches(a):
                return -1
        for pat, rec in self.entries:
            if rec.kind == NONCOMMUTING:
                if any(m.matches(a) for m in rec.list_members) and \
                   any(m.matches(b) for m in rec.list_members):
                    return None
        return 1

    def commutation_sign(self, a: ExprNode, b: ExprNode):
        """+1/-1 if the two factor subtrees commute/anticommute, None if
        undefined.  Parity composes over constituents (CommutingAsProduct)."""
        sign = 1
        for x in self.constituents(a):
            for y in self.constituents(b):
                s = self._pair_sign(x, y)
                if s is None:
                    return None
                sign *= s
        return sign


def declare(reg: PropertyRegistry, patterns, record: PropertyRecord) -> PropertyRegistry:
    return reg.declare(patterns, record)


def query(reg: PropertyRegistry, node: ExprNode, kind: str):
    return reg.query(node, kind)


def commutation_sign(reg: PropertyRegistry, a: ExprNode, b: ExprNode):
    return reg.commutation_sign(a, b)

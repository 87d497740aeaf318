"""Free/dummy index classification, fresh-name generation and relabeling.

Contraction is positional: a name occurring twice in a term is a dummy pair
regardless of variance, a name occurring once is free, three occurrences are
an error.  Names live in declared index sets; new dummies come from the first
unused set member, then from the generated family (q1, q2, ...).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .expr import (ARROW, INT, LIST, MEASURE, PROD, SPLICE, SUM, ExprNode,
                   ParentRel)
from .properties import INDICES, INTEGER, PropertyRegistry

_STRUCTURAL = (PROD, INT)
_INERT = (MEASURE, LIST, ARROW, SPLICE)


class IndexError_(Exception):
    """Index bookkeeping failure (clash, exhausted set, mixed free indices)."""


@dataclass
class IndexSet:
    """A named ordered pool of index symbols plus a generated-name family."""

    name: str
    members: list[str]
    generator: str | None = None
    dimension: int | None = None
    rank: int = 0

    def member_rank(self, name: str):
        try:
            return self.members.index(name)
        except ValueError:
            pass
        if self.generator and re.fullmatch(
                re.escape(self.generator) + r"[1-9][0-9]*", name):
            return len(self.members) + int(name[len(self.generator):]) - 1
        return None

    def name_for_rank(self, rank: int) -> str:
        if rank < len(self.members):
            return self.members[rank]
        if self.generator is None:
            raise IndexError_(f"index set '{self.name}' is exhausted and has "
                              f"no generated-name family")
        return f"{self.generator}{rank - len(self.members) + 1}"


def _build_index_table(reg: PropertyRegistry):
    sets: dict[str, IndexSet] = {}
    seen_records = set()
    for pat, rec in reg.entries:
        if rec.kind != INDICES or id(rec) in seen_records:
            continue
        seen_records.add(id(rec))
        set_name = rec.arg("set") or rec.arg("name") or "indices"
        iset = sets.get(set_name)
        if iset is None:
            iset = IndexSet(set_name, [], rank=len(sets))
            sets[set_name] = iset
        for member in rec.list_members:
            if member.family:
                iset.generator = member.name
            elif member.name not in iset.members:
                iset.members.append(member.name)
    for pat, rec in reg.entries:
        if rec.kind != INTEGER:
            continue
        rng = rec.arg("range")
        if rng is None:
            continue
        for iset in sets.values():
            if any(pat.matches_name(m) for m in iset.members):
                iset.dimension = rng[1] - rng[0] + 1
    by_name: dict[str, tuple[IndexSet, int]] = {}
    for iset in sets.values():
        for n, member in enumerate(iset.members):
            by_name[member] = (iset, n)
    return (tuple(sets.values()), by_name)


def index_sets(reg: PropertyRegistry) -> tuple[IndexSet, ...]:
    if reg._index_table is None:
        reg._index_table = _build_index_table(reg)
    return reg._index_table[0]


def index_set_of(reg: PropertyRegistry, name: str):
    """The IndexSet a name belongs to (explicit member or generated), or None."""
    if reg._index_table is None:
        reg._index_table = _build_index_table(reg)
    hit = reg._index_table[1].get(name)
    if hit is not None:
        return hit[0]
    for iset in reg._index_table[0]:
        if iset.generator and re.fullmatch(
                re.escape(iset.generator) + r"[1-9][0-9]*", name):
            return iset
    return None


def _is_index_name(reg: PropertyRegistry, name: str) -> bool:
    return name != "#" and not name.isdigit() and not reg.is_non_index(name)


def index_iterator(node: ExprNode, reg: PropertyRegistry):
    """Yield the index child nodes visible to the outside world at `node`,
    in left-to-right tree order.  Index-inheriting nodes (derivatives,
    accents, declared IndexInherit) show their arguments' indices first,
    then their own scripts."""
    if node.name in _STRUCTURAL:
        for c in node.children:
            yield from index_iterator(c, reg)
        return
    if node.name == SUM:
        if node.children:
            yield from index_iterator(node.children[0], reg)
        return
    if node.name in _INERT or node.is_number():
        return
    if reg.inherits_indices(node):
        for c in node.arg_children():
            yield from index_iterator(c, reg)
    for c in node.children:
        if c.parent_rel in (ParentRel.SUB, ParentRel.SUPER) and \
                _is_index_name(reg, c.name):
            yield c


@dataclass
class IndexSlot:
    name: str
    position: int
    variance: str            # '_' or '^'
    node: ExprNode           # the index child itself, aliased into the tree
    set_name: str | None


@dataclass
class IndexClassification:
    free: list               # (name, position)
    dummy: list              # (name, (position, position))
    slots: list              # all IndexSlot records in traversal order

    def free_names(self) -> list[str]:
        return [n for n, _ in self.free]

    def dummy_names(self) -> list[str]:
        return [n for n, _ in self.dummy]


def _term_slots(node: ExprNode, reg: PropertyRegistry, out: list):
    """Collect term-level slots; an inner sum contributes the free slots of
    its first branch after checking all branches agree."""
    if node.name == SUM:
        branches = [classify_indices(b, reg) for b in node.children]
        frees = [sorted(c.free_names()) for c in branches]
        for other in frees[1:]:
            if other != frees[0]:
                raise IndexError_(
                    f"terms of a sum carry different free indices: "
                    f"{frees[0]} vs {other}")
        first = branches[0]
        by_pos = {pos: slot for slot in first.slots
                  for pos in [slot.position]}
        for name, pos in first.free:
            out.append(by_pos[pos])
        return
    if node.name in _STRUCTURAL:
        for c in node.children:
            _term_slots(c, reg, out)
        return
    if node.name in _INERT or node.is_number():
        return
    if reg.inherits_indices(node):
        for c in node.arg_children():
            _term_slots(c, reg, out)
    for c in node.children:
        if c.parent_rel in (ParentRel.SUB, ParentRel.SUPER) and \
                _is_index_name(reg, c.name):
            iset = index_set_of(reg, c.name)
            out.append(IndexSlot(c.name, -1, c.parent_rel.value, c,
                                 iset.name if iset else None))


def classify_indices(term: ExprNode, reg: PropertyRegistry) -> IndexClassification:
    """Free/dummy classification of a single term (no top-level sum)."""
    if term.name == SUM:
        raise IndexError_("classify_indices needs a single term, not a sum")
    slots: list[IndexSlot] = []
    _term_slots(term, reg, slots)
    for n, slot in enumerate(slots):
        slot.position = n
    occurrences: dict[str, list[int]] = {}
    for slot in slots:
        occurrences.setdefault(slot.name, []).append(slot.position)
    free, dummy = [], []
    for name, positions in occurrences.items():
        if len(positions) == 1:
            free.append((name, positions[0]))
        elif len(positions) == 2:
            dummy.append((name, (positions[0], positions[1])))
        else:
            raise IndexError_(f"index '{name}' occurs {len(positions)} times "
                              f"in one term, at positions {positions}")
    return IndexClassification(free, dummy, slots)


def all_index_names(node: ExprNode, reg: PropertyRegistry) -> set[str]:
    """Every index-position name anywhere in the tree, sum branches included;
    the in-use set for clash avoidance."""
    names = set()
    for n in node.walk():
        for c in n.children:
            if c.parent_rel in (ParentRel.SUB, ParentRel.SUPER) and \
                    _is_index_name(reg, c.name):
                names.add(c.name)
    return names


def fresh_dummy(iset: IndexSet, in_use) -> str:
    """First unused explicit member in declaration order, then generated
    names q1, q2, ... skipping names in use."""
    in_use = set(in_use)
    for member in iset.members:
        if member not in in_use:
            return member
    if iset.generator is None:
        raise IndexError_(f"index set '{iset.name}' is exhausted and has no "
                          f"generated-name family")
    k = 1
    while f"{iset.generator}{k}" in in_use:
        k += 1
    return f"{iset.generator}{k}"


def relabel_on_insert(host_term: ExprNode | None, inserted: ExprNode,
                      reg: PropertyRegistry, extra_in_use=()) -> ExprNode:
    """Rename the inserted subtree's dummy pairs that clash with the host's
    names (free or dummy).  Free indices of the inserted subtree are never
    renamed.  Returns a modified copy."""
    inserted = inserted.copy()
    in_use = set(extra_in_use)
    if host_term is not None:
        in_use |= all_index_names(host_term, reg)
    if not in_use:
        return inserted
    cls = classify_indices(inserted, reg)
    own_names = all_index_names(inserted, reg)
    rename: dict[str, str] = {}
    for name, _pair in cls.dummy:
        if name in in_use:
            iset = index_set_of(reg, name)
            if iset is None:
                continue
            new = fresh_dummy(iset, in_use | own_names)
            rename[name] = new
            own_names.add(new)
    if rename:
        for slot in cls.slots:
            if slot.name in rename:
                slot.node.name = rename[slot.name]
    return inserted


def rename_dummies(term: ExprNode, reg: PropertyRegistry) -> ExprNode:
    """Rename dummies to the earliest unused members of their sets, in
    first-occurrence order.  Free indices are untouched; idempotent."""
    if term.name == SUM:
        out = term.copy()
        out.children = [rename_dummies(t, reg) for t in out.children]
        return out
    term = term.copy()
    cls = classify_indices(term, reg)
    dummy_names = {name for name, _ in cls.dummy}
    blocked = all_index_names(term, reg) - dummy_names
    counters: dict[str, int] = {}
    pools: dict[str, list[str]] = {}
    rename: dict[str, str] = {}
    for slot in cls.slots:
        name = slot.name
        if name not in dummy_names or name in rename:
            continue
        iset = index_set_of(reg, name)
        if iset is None:
            rename[name] = name
            continue
        pool = pools.get(iset.name)
        if pool is None:
            pool = [m for m in iset.members if m not in blocked]
            pools[iset.name] = pool
        k = counters.get(iset.name, 0)
        if k < len(pool):
            new = pool[k]
        else:
            gen_k = k - len(pool)
            if iset.generator is None:
                raise IndexError_(f"index set '{iset.name}' is exhausted and "
                                  f"has no generated-name family")
            new = None
            n = 1
            skipped = 0
            while new is None:
                cand = f"{iset.generator}{n}"
                if cand in blocked:
                    n += 1
                    continue
                if skipped == gen_k:
                    new = cand
                else:
                    skipped += 1
                    n += 1
        counters[iset.name] = k + 1
        rename[name] = new
    changed = {k: v for k, v in rename.items() if k != v}
    if changed:
        for slot in cls.slots:
            if slot.name in changed:
                slot.node.name = changed[slot.name]
    return term

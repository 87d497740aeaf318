"""Mono-term canonical forms.

A term is brought to the unique minimal writing under three kinds of moves:
per-factor slot permutations from the declared symmetry group (with signs),
exchange of identical factors, and dummy renaming.  The minimum is found by a
backtracking search over factor choices and group elements that compares the
emitted index sequence against the best found so far and prunes on the first
strictly-greater key; equal-key completions with opposite accumulated signs
prove the term is zero.
"""

from __future__ import annotations

import itertools
import re
from .expr import (PROD, SUM, Expression, ExprNode, ParentRel,
                   normalize, zero)
from .indices import (IndexError_, IndexSet, all_index_names, classify_indices,
                      index_iterator, index_set_of, index_sets)
from .properties import (ANTISYMMETRIC, KRONECKER, SYMMETRIC, TABLEAU,
                         PropertyRegistry, tableau_of)

_VAR_BIT = {"_": 0, "^": 1}
_GROUP_CAP = 45000


class CanonicalError(Exception):
    pass


# ---------------------------------------------------------------------------
# Permutation helpers.  apply(c, p)[j] == c[p[j]]; compose(a, b) is "apply a,
# then b": apply(apply(c, a), b) == apply(c, compose(a, b)).

def apply_perm(contents, p):
    return tuple(contents[p[j]] for j in range(len(p)))


def compose(a, b):
    return tuple(a[b[j]] for j in range(len(b)))


def perm_parity(p) -> int:
    p = list(p)
    parity = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            parity = -parity
    return parity


def _closure(generators, n):
    identity = tuple(range(n))
    group = {identity: 1}
    frontier = [identity]
    while frontier:
        fresh = []
        for p in frontier:
            sp = group[p]
            for g, sg in generators:
                q = compose(p, g)
                sq = sp * sg
                have = group.get(q)
                if have is None:
                    group[q] = sq
                    fresh.append(q)
                elif have != sq:
                    raise CanonicalError("inconsistent symmetry generators")
        frontier = fresh
        if len(group) > _GROUP_CAP:
            raise CanonicalError("symmetry group too large")
    return tuple(sorted(group.items()))


def tableau_mono_term_group(shape, filling, nslots):
    """Slot group generated by antisymmetry within tableau columns and
    exchange of equal-length columns."""
    ncols = shape[0] if shape else 0
    columns = []
    for c in range(ncols):
        col = [row[c] for row in filling if len(row) > c]
        columns.append(col)
    gens = []
    for col in columns:
        for a, b in zip(col, col[1:]):
            p = list(range(nslots))
            p[a], p[b] = p[b], p[a]
            gens.append((tuple(p), -1))
    for ca, cb in zip(columns, columns[1:]):
        if len(ca) == len(cb):
            p = list(range(nslots))
            for x, y in zip(ca, cb):
                p[x], p[y] = p[y], p[x]
            gens.append((tuple(p), 1))
    return _closure(gens, nslots)


def _full_group(nslots, signed):
    out = []
    for p in itertools.permutations(range(nslots)):
        out.append((p, perm_parity(p) if signed else 1))
    return tuple(out)


def mono_term_group(reg: PropertyRegistry, node: ExprNode, nslots: int):
    """Signed slot permutations of one factor's mono-term symmetry; the
    identity group when nothing is declared."""
    rec = reg.query(node, TABLEAU)
    if rec is not None:
        shape, filling = tableau_of(rec)
        if sum(shape) == nslots:
            return tableau_mono_term_group(shape, filling, nslots)
    if reg.query(node, SYMMETRIC) is not None or \
            (reg.query(node, KRONECKER) is not None and nslots == 2):
        return _full_group(nslots, signed=False)
    if reg.query(node, ANTISYMMETRIC) is not None:
        return _full_group(nslots, signed=True)
    return ((tuple(range(nslots)), 1),)


def restrict_to_variance(group, varbits):
    """Drop group elements that would move an index between sub and super
    slots; no-op for uniform-variance factors."""
    if len(set(varbits)) <= 1:
        return group
    kept = [(p, s) for p, s in group
            if all(varbits[p[j]] == varbits[j] for j in range(len(p)))]
    return tuple(kept)


# ---------------------------------------------------------------------------
# Naming context: maps index names to comparable integer keys and hands out
# canonical dummy names per set.

_SET_SHIFT = 20


class NamingContext:
    """Comparison keys for index names: (set rank, member rank, variance)
    packed into one int.  Dummy pools skip the blocked (free) names.
    Undeclared names act as one-member pseudo-sets ranked after the declared
    sets; pass them up front (sorted) so ranking is input-order independent."""

    def __init__(self, reg: PropertyRegistry, blocked_names, extra_names=()):
        self.reg = reg
        self.blocked = set(blocked_names)
        declared = index_sets(reg)
        self.sets: list = list(declared)
        self._set_rank = {s.name: i for i, s in enumerate(declared)}
        self._pseudo: dict[str, int] = {}
        self._pools: list[list[str]] = [[] for _ in declared]
        self._pool_ranks: list[list[int]] = [[] for _ in declared]
        self._base_cache: dict[str, int] = {}
        self._base_to_name: dict[int, str] = {}
        for name in sorted(set(extra_names)):
            if index_set_of(reg, name) is None:
                self.set_rank_of(name)

    def set_rank_of(self, name: str) -> int:
        iset = index_set_of(self.reg, name)
        if iset is not None:
            return self._set_rank[iset.name]
        r = self._pseudo.get(name)
        if r is None:
            r = len(self.sets)
            self._pseudo[name] = r
            self.sets.append(IndexSet(name, [name], rank=r))
            self._pools.append([])
            self._pool_ranks.append([])
            self._set_rank[name] = r
        return r

    def base_of(self, name: str, set_rank=None) -> int:
        b = self._base_cache.get(name)
        if b is None:
            if set_rank is None:
                set_rank = self.set_rank_of(name)
            iset = self.sets[set_rank]
            member_rank = iset.member_rank(name)
            if member_rank is None:
                member_rank = len(iset.members) + 500000
            b = (set_rank << _SET_SHIFT) | (member_rank << 1)
            self._base_cache[name] = b
            self._base_to_name[b] = name
        return b

    def name_of_base(self, base: int) -> str:
        return self._base_to_name[base]

    def pool_rank(self, set_rank: int, k: int) -> int:
        """Comparison base of the k-th canonical dummy of a set."""
        ranks = self._pool_ranks[set_rank]
        while len(ranks) <= k:
            self._extend_pool(set_rank)
        return ranks[k]

    def pool_name(self, set_rank: int, k: int) -> str:
        pool = self._pools[set_rank]
        while len(pool) <= k:
            self._extend_pool(set_rank)
        return pool[k]

    def _extend_pool(self, set_rank: int):
        iset = self.sets[set_rank]
        pool = self._pools[set_rank]
        have = len(pool)
        n_member = 0
        taken = set(pool)
        for m in iset.members:
            if m not in self.blocked and m not in taken:
                pool.append(m)
                self._pool_ranks[set_rank].append(self.base_of(m, set_rank))
                if len(pool) > have:
                    return
        if iset.generator is None:
            raise IndexError_(f"index set '{iset.name}' is exhausted and has "
                              f"no generated-name family")
        k = 1
        while True:
            cand = f"{iset.generator}{k}"
            if cand not in self.blocked and cand not in taken:
                pool.append(cand)
                self._pool_ranks[set_rank].append(self.base_of(cand, set_rank))
                return
            k += 1


# ---------------------------------------------------------------------------
# The search core.

class SearchFactor:
    __slots__ = ("templates", "varbits", "payload")

    def __init__(self, templates, varbits, payload=None):
        self.templates = templates  # [(contents, sign)]; contents: int tuple
        self.varbits = varbits
        self.payload = payload      # caller's handle (tree refs etc.)


def make_templates(contents, group):
    """Deduplicated (arrangement, sign) images of one factor under its group.
    Returns None when two images coincide with opposite signs: the factor is
    identically zero."""
    seen: dict[tuple, int] = {}
    for p, s in group:
        arr = apply_perm(contents, p)
        have = seen.get(arr)
        if have is None:
            seen[arr] = s
        elif have != s:
            return None
    return sorted(seen.items())


class SearchResult:
    __slots__ = ("keys", "sign", "chosen", "assignment")

    def __init__(self, keys, sign, chosen, assignment):
        self.keys = keys            # emitted comparison keys, flat
        self.sign = sign
        self.chosen = chosen        # [(SearchFactor, contents)] in output order
        self.assignment = assignment  # pair id -> (set_rank, k)


def canonical_search(blocks, pair_set, ctx: NamingContext):
    """Minimise the emitted key sequence over block orderings and group
    images.  blocks: [(list[SearchFactor], exchange_sign|None)].  Returns a
    SearchResult, or None when the term is identically zero.

    Branches whose emitted prefix exceeds the best are pruned; branches
    reaching an already-visited search state (same open dummies, counters and
    remaining factors behind an equal prefix) are merged — with opposite
    accumulated signs the term is zero."""
    nsets = len(ctx.sets)
    counters = [0] * nsets
    assigned: dict[int, int] = {}
    assigned_k: dict[int, tuple] = {}
    open_pairs: dict[int, int] = {}
    out: list[int] = []
    chosen: list = []
    best: list = [None]
    zero_flag: list = [False]
    memo: dict = {}
    nblocks = len(blocks)

    # Identical factors (same templates) are interchangeable in the state.
    sig_table: dict = {}
    fsig: dict = {}
    for factors, _exch in blocks:
        for f in factors:
            key = (tuple(tpl for tpl, _s in f.templates), f.varbits)
            fsig[id(f)] = sig_table.setdefault(key, len(sig_table))

    epoch = [0]

    def complete(sign):
        cur = best[0]
        if cur is None or out < cur.keys:
            best[0] = SearchResult(list(out), sign, list(chosen),
                                   dict(assigned_k))
            epoch[0] += 1
            memo.clear()  # the prefix contract changed with the best
        elif out == cur.keys and sign != cur.sign:
            zero_flag[0] = True

    def rec(bi, remaining, comparing, sign):
        # `comparing`: the emitted prefix equals the best's prefix, so
        # per-slot pruning and the state memo apply.  A below-best branch
        # stops comparing; its completions do a full compare, and once one of
        # them replaces the best, the branch's later siblings share the new
        # best's prefix and comparison resumes.
        if zero_flag[0]:
            return
        if bi == nblocks:
            complete(sign)
            return
        factors, exch = blocks[bi]
        if remaining is None:
            remaining = tuple(range(len(factors)))
        if not remaining:
            rec(bi + 1, None, comparing, sign)
            return
        if comparing and best[0] is not None:
            state = (bi, tuple(sorted(fsig[id(factors[i])] for i in remaining)),
                     tuple(sorted(open_pairs.items())), tuple(counters),
                     len(out), sign)
            if state in memo:
                return
            memo[state] = True
        level_epoch = epoch[0]
        for pos, fi in enumerate(remaining):
            if exch is None and pos > 0:
                break
            fsign = -1 if (exch == -1 and pos % 2 == 1) else 1
            factor = factors[fi]
            varbits = factor.varbits
            for contents, tsign in factor.templates:
                if not comparing and epoch[0] != level_epoch:
                    comparing = True
                    level_epoch = epoch[0]
                mark = len(out)
                added: list[tuple[int, int]] = []
                closed: list[tuple[int, int]] = []
                child_comparing = comparing
                ok = True
                bkeys = best[0].keys if best[0] is not None else None
                for j, c in enumerate(contents):
                    if c >= 0:
                        key = c | varbits[j]
                    else:
                        pair = -c - 1
                        base = assigned.get(pair)
                        if base is None:
                            s = pair_set[pair]
                            k = counters[s]
                            base = ctx.pool_rank(s, k)
                            counters[s] = k + 1
                            assigned[pair] = base
                            assigned_k[pair] = (s, k)
                            open_pairs[pair] = base
                            added.append((pair, s))
                        else:
                            if pair in open_pairs:
                                closed.append((pair, open_pairs.pop(pair)))
                        key = base | varbits[j]
                    out.append(key)
                    if child_comparing and bkeys is not None:
                        bk = bkeys[len(out) - 1]
                        if key > bk:
                            ok = False
                            break
                        if key < bk:
                            child_comparing = False
                if ok:
                    chosen.append((factor, contents))
                    rest = remaining[:pos] + remaining[pos + 1:]
                    rec(bi, rest if rest else (), child_comparing,
                        sign * fsign * tsign)
                    chosen.pop()
                    if zero_flag[0]:
                        return
                del out[mark:]
                for pair, base in closed:
                    open_pairs[pair] = base
                for pair, s in added:
                    del assigned[pair]
                    del assigned_k[pair]
                    del open_pairs[pair]
                    counters[s] -= 1

    rec(0, None, True, 1)
    if zero_flag[0]:
        return None
    return best[0]


# ---------------------------------------------------------------------------
# Factor ordering with commutation signs (shared by prodsort and
# canonicalise).

def _factor_sort_key(reg: PropertyRegistry, f: ExprNode):
    pos = reg.sort_order_pos(f)
    nidx = len(list(index_iterator(f, reg)))
    if pos is not None:
        return (0, pos[0], pos[1], f.name, nidx)
    return (1, 0, 0, f.name, nidx)


def _is_bare_derivative(reg, f: ExprNode) -> bool:
    return reg.is_derivative(f) and not f.arg_children()


def _may_swap(reg, a: ExprNode, b: ExprNode):
    """Sign for swapping adjacent factors, or None when they must not cross
    (undefined commutation, or an operator-style derivative and a factor
    depending on it)."""
    if _is_bare_derivative(reg, a) and reg.depends_on(b, a.name):
        return None
    if _is_bare_derivative(reg, b) and reg.depends_on(a, b.name):
        return None
    return reg.commutation_sign(a, b)


def sort_factors(factors: list[ExprNode], reg: PropertyRegistry):
    """Bubble-sort factors by (SortOrder position, name, index count) using
    adjacent transpositions; every swap contributes its commutation sign and
    pairs with undefined sign never cross.  Returns (factors, sign)."""
    factors = list(factors)
    keys = [_factor_sort_key(reg, f) for f in factors]
    sign = 1
    changed = True
    while changed:
        changed = False
        for i in range(len(factors) - 1):
            if keys[i] > keys[i + 1]:
                s = _may_swap(reg, factors[i], factors[i + 1])
                if s is None:
                    continue
                factors[i], factors[i + 1] = factors[i + 1], factors[i]
                keys[i], keys[i + 1] = keys[i + 1], keys[i]
                sign *= s
                changed = True
    return factors, sign


# ---------------------------------------------------------------------------
# Tree-level canonicalisation.

def _is_plain_tensor(f: ExprNode) -> bool:
    return all(c.parent_rel in (ParentRel.SUB, ParentRel.SUPER)
               and not c.children for c in f.children)


def _factor_group(reg, f: ExprNode, nslots: int):
    if _is_plain_tensor(f):
        return mono_term_group(reg, f, nslots)
    args = f.arg_children()
    if (reg.is_derivative(f) or reg.is_accent(f)) and len(args) == 1 \
            and _is_plain_tensor(args[0]):
        inner = args[0]
        inner_n = len(inner.script_children())
        inner_group = mono_term_group(reg, inner, inner_n)
        if len(inner_group) > 1:
            embedded = []
            for p, s in inner_group:
                q = list(range(nslots))
                q[:inner_n] = p
                embedded.append((tuple(q), s))
            return tuple(embedded)
    return ((tuple(range(nslots)), 1),)


def _fingerprint(f: ExprNode, slot_ids: set) -> tuple:
    def walk(n):
        name = "#" if id(n) in slot_ids else n.name
        return (name, n.multiplier,
                tuple((c.parent_rel.value, walk(c)) for c in n.children))
    return walk(f)


def canonicalise_term(term: ExprNode, reg: PropertyRegistry) -> ExprNode:
    """Canonical form of one term: factors ordered, slots minimised under the
    mono-term groups with the sign in the multiplier, dummies renamed."""
    if term.multiplier == 0 or term.is_number():
        return term.copy()
    term = term.copy()
    if term.name == PROD:
        factors, sign = sort_factors(term.children, reg)
        term.children = factors
        term.multiplier *= sign
    else:
        factors = [term]

    cls = classify_indices(term, reg)
    pair_of_name = {}
    pair_set = []
    for name, _pos in cls.dummy:
        pair_of_name[name] = len(pair_set)
        pair_set.append(None)  # set rank filled below
    free_names = {name for name, _ in cls.free}
    all_names = all_index_names(term, reg)
    blocked = (all_names - set(pair_of_name)) | free_names
    ctx = NamingContext(reg, blocked, extra_names=all_names)
    for name, pid in pair_of_name.items():
        pair_set[pid] = ctx.set_rank_of(name)

    search_factors = []
    for f in factors:
        slots = list(index_iterator(f, reg))
        varbits = tuple(_VAR_BIT[s.parent_rel.value] for s in slots)
        contents = []
        for s in slots:
            pid = pair_of_name.get(s.name)
            if pid is None:
                contents.append(ctx.base_of(s.name))
            else:
                contents.append(-pid - 1)
        group = restrict_to_variance(_factor_group(reg, f, len(slots)), varbits)
        templates = make_templates(tuple(contents), group)
        if templates is None:
            return zero()
        slot_ids = {id(s) for s in slots}
        head = (f.name, len(slots), varbits,
                None if _is_plain_tensor(f) else _fingerprint(f, slot_ids))
        search_factors.append((head, SearchFactor(templates, varbits,
                                                  payload=(f, slots))))

    blocks = []
    i = 0
    while i < len(search_factors):
        j = i
        while j < len(search_factors) and \
                search_factors[j][0] == search_factors[i][0]:
            j += 1
        group_factors = [sf for _h, sf in search_factors[i:j]]
        exch = 1
        if len(group_factors) > 1:
            fa = group_factors[0].payload[0]
            fb = group_factors[1].payload[0]
            exch = _may_swap(reg, fa, fb)
        blocks.append((group_factors, exch))
        i = j

    result = canonical_search(blocks, pair_set, ctx)
    if result is None:
        return zero()

    # Write names and order back into the tree.
    name_of_pair = {pid: ctx.pool_name(s, k)
                    for pid, (s, k) in result.assignment.items()}
    base_to_name = {}
    for name in free_names:
        base_to_name[ctx.base_of(name)] = name
    new_factors = []
    for factor, contents in result.chosen:
        f, slots = factor.payload
        for j, c in enumerate(contents):
            if c >= 0:
                slots[j].name = base_to_name[c]
            else:
                slots[j].name = name_of_pair[-c - 1]
        new_factors.append(f)
    if term.name == PROD:
        term.children = new_factors
    term.multiplier *= result.sign
    return term


def canonicalise(e: Expression, reg: PropertyRegistry) -> Expression:
    """Deterministic, idempotent canonical form, term by term."""
    e = normalize(e)
    root = e.root
    if root.name == SUM:
        new_terms = []
        for t in root.children:
            ct = canonicalise_term(t, reg)
            if not ct.is_zero():
                ct.parent_rel = ParentRel.ARG
                new_terms.append(ct)
        out = ExprNode(SUM, children=new_terms)
        return normalize(Expression(out))
    return normalize(Expression(canonicalise_term(root, reg)))

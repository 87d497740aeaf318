"""Multi-term symmetry handling through Young projectors.

Replacing every tensor by its Young-projected image makes multi-term
identities (Ricci cyclic, Bianchi) manifest, so tensor monomials can be
compared, decomposed on a basis, or reduced to a minimal form by exact linear
algebra over the projected coordinates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from . import linalg
from .canonical import (NamingContext, SearchFactor, _SET_SHIFT, apply_perm,
                        canonical_search, compose, make_templates,
                        mono_term_group, perm_parity, restrict_to_variance)
from .expr import (PROD, SUM, Expression, ExprNode, ParentRel, normalize,
                   number, zero)
from .indices import classify_indices, index_set_of
from .properties import (ANTISYMMETRIC, KRONECKER, SYMMETRIC, TABLEAU,
                         PropertyRegistry, tableau_of)

_VAR_REL = {0: ParentRel.SUB, 1: ParentRel.SUPER}
_VAR_BIT = {"_": 0, "^": 1}


class SymmetryError(Exception):
    pass


# ---------------------------------------------------------------------------
# Tableaux and projectors

@dataclass(frozen=True)
class YoungTableau:
    """Shape (weakly decreasing row lengths) plus a filling assigning tensor
    slots (0-based) to cells, row by row."""

    shape: tuple
    filling: tuple  # tuple of rows, each a tuple of slot numbers

    def __post_init__(self):
        if any(a < b for a, b in zip(self.shape, self.shape[1:])):
            raise SymmetryError(f"shape {self.shape} rows must not grow")
        if tuple(len(r) for r in self.filling) != tuple(self.shape):
            raise SymmetryError("filling does not match shape")
        cells = [s for row in self.filling for s in row]
        if sorted(cells) != list(range(len(cells))):
            raise SymmetryError("filling must cover slots 0..n-1 exactly once")

    @property
    def cells(self) -> int:
        return sum(self.shape)

    def columns(self) -> list:
        ncols = self.shape[0] if self.shape else 0
        return [[row[c] for row in self.filling if len(row) > c]
                for c in range(ncols)]


@dataclass(frozen=True)
class SlotPermutationSum:
    """Formal weighted sum of slot permutations."""

    terms: tuple  # ((perm, Fraction weight), ...)

    def compose_with(self, other: "SlotPermutationSum") -> "SlotPermutationSum":
        acc: dict = {}
        for p, w in self.terms:
            for q, v in other.terms:
                r = compose(p, q)
                acc[r] = acc.get(r, Fraction(0)) + w * v
        return SlotPermutationSum(
            tuple(sorted((p, w) for p, w in acc.items() if w != 0)))


def standard_tableaux_count(shape) -> int:
    n = sum(shape)
    hooks = 1
    for i, row_len in enumerate(shape):
        for j in range(row_len):
            arm = row_len - j - 1
            leg = sum(1 for r in shape[i + 1:] if r > j)
            hooks *= arm + leg + 1
    return factorial(n) // hooks


def _subset_perms(groups, n, signed):
    """Permutations moving contents only inside each listed slot group."""
    out = []
    for choice in itertools.product(*[itertools.permutations(g) for g in groups]):
        p = list(range(n))
        sign = 1
        for slots, image in zip(groups, choice):
            for s, im in zip(slots, image):
                p[s] = im
            if signed:
                base = {s: k for k, s in enumerate(slots)}
                sign *= perm_parity([base[x] for x in image])
        out.append((tuple(p), sign))
    return out


def young_projector(tab: YoungTableau) -> SlotPermutationSum:
    """Normalized row-symmetrize / column-antisymmetrize operator; idempotent
    on slot space."""
    n = tab.cells
    rows = [list(r) for r in tab.filling]
    cols = tab.columns()
    row_perms = _subset_perms([r for r in rows if len(r) > 1], n, signed=False)
    col_perms = _subset_perms([c for c in cols if len(c) > 1], n, signed=True)
    norm = Fraction(standard_tableaux_count(tab.shape), factorial(n))
    acc: dict = {}
    for rp, _ in row_perms:
        for cp, cs in col_perms:
            net = compose(cp, rp)   # antisymmetrize columns, then symmetrize rows
            acc[net] = acc.get(net, Fraction(0)) + norm * cs
    return SlotPermutationSum(
        tuple(sorted((p, w) for p, w in acc.items() if w != 0)))


def tableau_for(reg: PropertyRegistry, probe: ExprNode, nslots: int):
    """Tableau of a tensor factor: declared TableauSymmetry (or the
    Riemann/Weyl preset), or the single-row/column tableau implied by
    Symmetric/AntiSymmetric; None when nothing applies."""
    rec = reg.query(probe, TABLEAU)
    if rec is not None:
        shape, filling = tableau_of(rec)
        if sum(shape) == nslots:
            return YoungTableau(tuple(shape), tuple(tuple(r) for r in filling))
    if nslots >= 2 and (reg.query(probe, SYMMETRIC) is not None or
                        (reg.query(probe, KRONECKER) is not None and nslots == 2)):
        return YoungTableau((nslots,), (tuple(range(nslots)),))
    if nslots >= 2 and reg.query(probe, ANTISYMMETRIC) is not None:
        return YoungTableau((1,) * nslots, tuple((k,) for k in range(nslots)))
    return None


# ---------------------------------------------------------------------------
# Dense monomials: (heads, keys) pairs under a shared naming context

def _probe_node(name: str, varbits) -> ExprNode:
    return ExprNode(name, children=[ExprNode("x", parent_rel=_VAR_REL[v])
                                    for v in varbits])


class MultiTermContext:
    """Shared state for one engine operation: naming, cached groups and
    projectors keyed by factor head."""

    def __init__(self, reg: PropertyRegistry, blocked_names=(), extra_names=()):
        self.reg = reg
        self.naming = NamingContext(reg, blocked_names, extra_names)
        self._groups: dict = {}
        self._projectors: dict = {}

    def group(self, head):
        g = self._groups.get(head)
        if g is None:
            name, nslots, varbits, _tag = head
            g = mono_term_group(self.reg, _probe_node(name, varbits), nslots)
            g = restrict_to_variance(g, varbits)
            self._groups[head] = g
        return g

    def projector(self, head):
        if head in self._projectors:
            return self._projectors[head]
        name, nslots, varbits, _tag = head
        tab = tableau_for(self.reg, _probe_node(name, varbits), nslots)
        proj = None if tab is None else young_projector(tab).terms
        self._projectors[head] = proj
        return proj


@dataclass
class DenseTerm:
    mult: Fraction
    factors: list          # [(head, contents tuple)]
    pair_set: list         # pair id -> set rank
    pair_name: list        # pair id -> original name (diagnostics, targeting)


def tree_to_dense(term: ExprNode, ctx: MultiTermContext, tag: int = 0,
                  require_plain=True) -> DenseTerm:
    reg = ctx.reg
    factors = term.children if term.name == PROD else [term]
    cls = classify_indices(term, reg)
    dummy_names = {name for name, _ in cls.dummy}
    pair_of: dict[str, int] = {}
    pair_set: list[int] = []
    pair_name: list[str] = []
    dense_factors = []
    for f in factors:
        if f.is_number():
            continue
        if not all(c.parent_rel in (ParentRel.SUB, ParentRel.SUPER)
                   and not c.children for c in f.children):
            if require_plain:
                raise SymmetryError(
                    f"factor '{f.name}' is not a plain tensor with index "
                    f"slots only")
        contents = []
        varbits = []
        for c in f.children:
            if c.parent_rel not in (ParentRel.SUB, ParentRel.SUPER):
                continue
            if c.name.isdigit() or reg.is_non_index(c.name):
                continue
            varbits.append(_VAR_BIT[c.parent_rel.value])
            if c.name in dummy_names:
                pid = pair_of.get(c.name)
                if pid is None:
                    pid = len(pair_set)
                    pair_of[c.name] = pid
                    pair_set.append(ctx.naming.set_rank_of(c.name))
                    pair_name.append(c.name)
                contents.append(-pid - 1)
            else:
                contents.append(ctx.naming.base_of(c.name))
        head = (f.name, len(contents), tuple(varbits), tag)
        dense_factors.append((head, tuple(contents)))
    return DenseTerm(term.multiplier, dense_factors, pair_set, pair_name)


def dense_canonical(factors, pair_set, ctx: MultiTermContext):
    """Canonical (heads, keys, sign) of a dense monomial, or None if zero."""
    ordered = sorted(factors, key=lambda hc: hc[0])
    search_factors = []
    for head, contents in ordered:
        templates = make_templates(contents, ctx.group(head))
        if templates is None:
            return None
        search_factors.append((head, SearchFactor(templates, head[2],
                                                  payload=head)))
    blocks = []
    i = 0
    while i < len(search_factors):
        j = i
        while j < len(search_factors) and \
                search_factors[j][0] == search_factors[i][0]:
            j += 1
        blocks.append(([sf for _h, sf in search_factors[i:j]], 1))
        i = j
    result = canonical_search(blocks, pair_set, ctx.naming)
    if result is None:
        return None
    heads = tuple(f.payload for f, _c in result.chosen)
    return heads, tuple(result.keys), result.sign


def expand_dense(heads, keys):
    """Back from canonical (heads, keys) to factor contents and pair table."""
    bases = [k & ~1 for k in keys]
    counts: dict[int, int] = {}
    for b in bases:
        counts[b] = counts.get(b, 0) + 1
    pair_id: dict[int, int] = {}
    pair_set: list[int] = []
    contents_flat = []
    for b in bases:
        if counts[b] == 2:
            pid = pair_id.get(b)
            if pid is None:
                pid = len(pair_set)
                pair_id[b] = pid
                pair_set.append(b >> _SET_SHIFT)
            contents_flat.append(-pid - 1)
        else:
            contents_flat.append(b)
    factors = []
    at = 0
    for head in heads:
        n = head[1]
        factors.append((head, tuple(contents_flat[at:at + n])))
        at += n
    return factors, pair_set


def dense_to_tree(heads, keys, coeff, ctx: MultiTermContext) -> ExprNode:
    factors = []
    at = 0
    for head in heads:
        name, nslots, varbits, _tag = head
        node = ExprNode(name, parent_rel=ParentRel.ARG)
        for j in range(nslots):
            key = keys[at + j]
            child = ExprNode(ctx.naming.name_of_base(key & ~1),
                             parent_rel=_VAR_REL[key & 1])
            node.children.append(child)
        at += nslots
        factors.append(node)
    if not factors:
        return number(coeff)
    if len(factors) == 1:
        out = factors[0]
    else:
        out = ExprNode(PROD, children=factors)
    out.multiplier = Fraction(coeff)
    return out


def collected_to_expression(acc: dict, ctx: MultiTermContext) -> Expression:
    terms = []
    for (heads, keys) in sorted(acc):
        coeff = acc[(heads, keys)]
        if coeff == 0:
            continue
        t = dense_to_tree(heads, keys, coeff, ctx)
        t.parent_rel = ParentRel.ARG
        terms.append(t)
    if not terms:
        return Expression(zero())
    if len(terms) == 1:
        terms[0].parent_rel = ParentRel.NONE
        return normalize(Expression(terms[0]))
    return normalize(Expression(ExprNode(SUM, children=terms)))


# ---------------------------------------------------------------------------
# Projection pipeline

def _free_names_of(e: Expression, reg) -> set:
    """Common free-name set of all terms; mixed free structure is an error."""
    terms = e.terms()
    first = sorted(classify_indices(terms[0], reg).free_names())
    for t in terms[1:]:
        other = sorted(classify_indices(t, reg).free_names())
        if other != first:
            raise SymmetryError(f"terms carry different free indices: "
                                f"{first} vs {other}")
    return set(first)


def _context_for(reg, *exprs) -> MultiTermContext:
    from .indices import all_index_names
    blocked = _free_names_of(exprs[0], reg)
    names: set = set()
    for e in exprs:
        names |= all_index_names(e.root, reg)
    return MultiTermContext(reg, blocked, extra_names=names)


def _mark_pending(dense: DenseTerm, ctx: MultiTermContext, require: bool):
    marked = []
    for head, contents in dense.factors:
        name, nslots, varbits, _tag = head
        pending_head = (name, nslots, varbits, 1)
        if nslots and ctx.projector(pending_head) is not None:
            marked.append((pending_head, contents))
        else:
            if require and nslots:
                raise SymmetryError(f"factor '{name}' carries no tableau "
                                    f"symmetry; cannot Young-project it")
            marked.append((head, contents))
    return marked


def _project_rounds(acc: dict, ctx: MultiTermContext) -> dict:
    """Pending factors (tag 1) are projected one per round, with mono-term
    collection between rounds to keep the working set small."""
    while True:
        pending_found = False
        nxt: dict = {}
        for (heads, keys), coeff in acc.items():
            idx = next((i for i, h in enumerate(heads) if h[3] == 1), None)
            if idx is None:
                nxt[(heads, keys)] = nxt.get((heads, keys), Fraction(0)) + coeff
                continue
            pending_found = True
            factors, pair_set = expand_dense(heads, keys)
            head, contents = factors[idx]
            name, nslots, varbits, _tag = head
            done_head = (name, nslots, varbits, 0)
            for perm, weight in ctx.projector(head):
                new_factors = list(factors)
                new_factors[idx] = (done_head, apply_perm(contents, perm))
                canon = dense_canonical(new_factors, pair_set, ctx)
                if canon is None:
                    continue
                h2, k2, sign = canon
                key = (h2, k2)
                nxt[key] = nxt.get(key, Fraction(0)) + coeff * weight * sign
        acc = {k: v for k, v in nxt.items() if v != 0}
        if not pending_found:
            return acc


def project_terms(e: Expression, reg: PropertyRegistry,
                  ctx: MultiTermContext | None = None, require=True):
    """Young-project every tensor factor of every term; returns the collected
    coefficient dict over canonical dense monomials plus the context."""
    e = normalize(e)
    if ctx is None:
        ctx = _context_for(reg, e)
    acc: dict = {}
    for term in e.terms():
        if term.is_zero():
            continue
        dense = tree_to_dense(term, ctx)
        factors = _mark_pending(dense, ctx, require)
        canon = dense_canonical(factors, dense.pair_set, ctx)
        if canon is None:
            continue
        heads, keys, sign = canon
        key = (heads, keys)
        acc[key] = acc.get(key, Fraction(0)) + dense.mult * sign
    acc = {k: v for k, v in acc.items() if v != 0}
    return _project_rounds(acc, ctx), ctx


def young_project(e: Expression, reg: PropertyRegistry) -> Expression:
    """Replace every tensor by its Young-projector image, expand, rename
    dummies and collect; the result equals the input as a tensor."""
    acc, ctx = project_terms(e, reg)
    return collected_to_expression(acc, ctx)


# ---------------------------------------------------------------------------
# Antisymmetrisation

def asym(e: Expression, specs, reg: PropertyRegistry) -> Expression:
    """Antisymmetrise over the listed index slots: sum of all permutations
    with parity, each weighted 1/k!.  specs: (name, '^'|'_'|None) pairs.
    Vanishes when more slots are antisymmetrised than the set's dimension."""
    e = normalize(e)
    ctx = _context_for(reg, e)
    k = len(specs)
    set_dims = set()
    for name, _var in specs:
        iset = index_set_of(reg, name)
        set_dims.add(iset.dimension if iset else None)
    if len(set_dims) == 1:
        dim = set_dims.pop()
        if dim is not None and k > dim:
            return Expression(zero())

    acc: dict = {}
    weight0 = Fraction(1, factorial(k))
    for term in e.terms():
        if term.is_zero():
            continue
        dense = tree_to_dense(term, ctx)
        flat = []   # (factor index, slot index, content, varbit)
        for fi, (head, contents) in enumerate(dense.factors):
            for j, c in enumerate(contents):
                flat.append((fi, j, c, head[2][j]))
        targets = []
        for name, var in specs:
            want_bit = None if var is None else _VAR_BIT[var]
            tok = None
            if name in dense.pair_name:
                tok = -dense.pair_name.index(name) - 1
            else:
                tok = ctx.naming.base_of(name)
            found = None
            for pos, (fi, j, c, vb) in enumerate(flat):
                if c == tok and (want_bit is None or vb == want_bit):
                    found = pos
                    break
            if found is None:
                raise SymmetryError(f"index '{name}' not found for "
                                    f"antisymmetrisation")
            targets.append(found)
        if len(set(targets)) != k:
            raise SymmetryError("antisymmetrisation slots are not distinct")
        base_contents = [list(c) for _h, c in dense.factors]
        target_tokens = [flat[t][2] for t in targets]
        for sigma in itertools.permutations(range(k)):
            sign = perm_parity(sigma)
            new_contents = [list(c) for c in base_contents]
            for slot_pos, src in zip(targets, sigma):
                fi, j, _c, _vb = flat[slot_pos]
                new_contents[fi][j] = target_tokens[src]
            new_factors = [(h, tuple(c)) for (h, _old), c
                           in zip(dense.factors, new_contents)]
            canon = dense_canonical(new_factors, dense.pair_set, ctx)
            if canon is None:
                continue
            heads, keys, csign = canon
            key = (heads, keys)
            acc[key] = acc.get(key, Fraction(0)) + \
                dense.mult * weight0 * sign * csign
    acc = {kk: v for kk, v in acc.items() if v != 0}
    return collected_to_expression(acc, ctx)


# ---------------------------------------------------------------------------
# Contractions, bases, decomposition

def all_contractions(e: Expression, reg: PropertyRegistry) -> list:
    """All linearly independent full contractions of a product of tensors
    with all indices free.  Pairings join slots of the same index set;
    candidates are canonicalised, deduplicated, then filtered to a
    projector-rank-independent set in canonical-form order."""
    e = normalize(e)
    term = e.root
    if term.name == SUM:
        raise SymmetryError("all_contractions needs a single monomial")
    reg_cls = classify_indices(term, reg)
    if reg_cls.dummy:
        raise SymmetryError("all_contractions needs all indices free")
    nslots = len(reg_cls.slots)
    if nslots % 2 != 0:
        raise SymmetryError(f"odd index count {nslots}: no full contraction")

    from .indices import all_index_names
    ctx = MultiTermContext(reg, (), extra_names=all_index_names(term, reg))
    dense = tree_to_dense(term, ctx)
    flat = []
    for fi, (head, contents) in enumerate(dense.factors):
        for j, c in enumerate(contents):
            flat.append((fi, j, c))
    set_of_slot = [c >> _SET_SHIFT for _fi, _j, c in flat]

    seen: set = set()
    candidates = []

    def pairings(order, current):
        if not order:
            pair_set = [set_of_slot[a] for a, _b in current]
            new_contents = [list(c) for _h, c in dense.factors]
            for pid, (a, b) in enumerate(current):
                for pos in (a, b):
                    fi, j, _c = flat[pos]
                    new_contents[fi][j] = -pid - 1
            new_factors = [(h, tuple(c)) for (h, _old), c
                           in zip(dense.factors, new_contents)]
            canon = dense_canonical(new_factors, pair_set, ctx)
            if canon is None:
                return
            heads, keys, _sign = canon
            if (heads, keys) not in seen:
                seen.add((heads, keys))
                candidates.append((heads, keys))
            return
        first = order[0]
        rest = order[1:]
        for i, partner in enumerate(rest):
            if set_of_slot[first] != set_of_slot[partner]:
                continue
            pairings(rest[:i] + rest[i + 1:], current + [(first, partner)])

    pairings(list(range(nslots)), [])
    candidates.sort()

    kept = []
    kept_rows: list = []
    key_index: dict = {}
    for heads, keys in candidates:
        acc = _project_candidate(heads, keys, ctx)
        for mono in acc:
            if mono not in key_index:
                key_index[mono] = len(key_index)
        vec = [Fraction(0)] * len(key_index)
        for mono, c in acc.items():
            vec[key_index[mono]] = c
        padded = [row + [Fraction(0)] * (len(key_index) - len(row))
                  for row in kept_rows]
        if linalg.dependency(padded + [vec]) is None:
            kept.append((heads, keys))
            kept_rows = padded + [vec]
    return [collected_to_expression({ck: Fraction(1)}, ctx) for ck in kept]


def _project_candidate(heads, keys, ctx: MultiTermContext) -> dict:
    factors, pair_set = expand_dense(heads, keys)
    marked = _mark_pending(DenseTerm(Fraction(1), factors, pair_set, []),
                           ctx, require=False)
    canon = dense_canonical(marked, pair_set, ctx)
    if canon is None:
        return {}
    h2, k2, sign = canon
    return _project_rounds({(h2, k2): Fraction(sign)}, ctx)


@dataclass
class MonomialBasis:
    """Basis of tensor monomials with their projected exact coordinates."""

    elements: list           # Expressions
    key_order: list          # canonical dense monomial keys, fixed order
    matrix: list             # rows of Fractions aligned with key_order


class BasisError(Exception):
    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


def _aligned_rows(dicts):
    key_order = sorted({k for d in dicts for k in d})
    rows = [[d.get(k, Fraction(0)) for k in key_order] for d in dicts]
    return key_order, rows


def build_basis(monomials, reg: PropertyRegistry) -> MonomialBasis:
    """Project and collect each monomial; rows must be linearly independent
    (a dependency is reported with its certificate)."""
    frees = None
    dicts = []
    for e in monomials:
        f = sorted(_free_names_of(e, reg))
        if frees is None:
            frees = f
        elif f != frees:
            raise BasisError(f"free indices differ across basis elements: "
                             f"{frees} vs {f}")
        acc, _ctx = project_terms(e, reg)
        dicts.append(acc)
    key_order, rows = _aligned_rows(dicts)
    cert = linalg.dependency(rows)
    if cert is not None:
        raise BasisError("basis elements are linearly dependent",
                         certificate=cert)
    return MonomialBasis(list(monomials), key_order, rows)


@dataclass
class CoefficientVector:
    coefficients: list  # Fractions, one per basis element

    def __iter__(self):
        return iter(self.coefficients)

    def __eq__(self, other):
        if isinstance(other, CoefficientVector):
            return self.coefficients == other.coefficients
        return list(self.coefficients) == [Fraction(x) for x in other]


def decompose(e: Expression, basis: MonomialBasis,
              reg: PropertyRegistry) -> CoefficientVector:
    """Exact coordinates of a monomial (or sum) on the basis; error when the
    expression lies outside the span."""
    acc, _ctx = project_terms(e, reg)
    extra = [k for k in acc if k not in set(basis.key_order)]
    for k in extra:
        if acc[k] != 0:
            raise BasisError("expression is not in the span of the basis")
    target = [acc.get(k, Fraction(0)) for k in basis.key_order]
    coeffs = linalg.solve_combination(basis.matrix, target)
    if coeffs is None:
        raise BasisError("expression is not in the span of the basis")
    return CoefficientVector(coeffs)


def reduce_sum(e: Expression, reg: PropertyRegistry) -> Expression:
    """Minimal form: scan terms left to right and fold every term that is a
    linear combination of the kept earlier terms into their coefficients."""
    e = normalize(e)
    if e.root.name != SUM:
        return e
    ctx = _context_for(reg, e)
    kept: list = []       # [term node (coefficient 1), coefficient]
    kept_dicts: list = []
    for term in e.terms():
        coeff = term.multiplier
        mono = term.copy()
        mono.multiplier = Fraction(1)
        acc, _ = project_terms(Expression(mono.copy()), reg, ctx=ctx)
        key_order, rows = _aligned_rows(kept_dicts + [acc])
        combo = linalg.solve_combination(rows[:-1], rows[-1])
        if combo is not None:
            for i, a in enumerate(combo):
                kept[i][1] += coeff * a
        else:
            kept.append([mono, coeff])
            kept_dicts.append(acc)
    out_terms = []
    for mono, coeff in kept:
        if coeff == 0:
            continue
        t = mono.copy()
        t.multiplier = coeff
        t.parent_rel = ParentRel.ARG
        out_terms.append(t)
    if not out_terms:
        return Expression(zero())
    return normalize(Expression(ExprNode(SUM, children=out_terms)))

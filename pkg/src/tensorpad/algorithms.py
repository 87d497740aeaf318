"""Transformation commands: substitution with index-aware matching,
distribution, Leibniz rule, partial integration, variation, collection and
sorting.

All operations are pure tree-to-tree transformations; the session layer wires
them to @command syntax and optional automatic post-rules.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .canonical import make_templates, mono_term_group, sort_factors
from .expr import (ARROW, INT, LIST, PROD, SUM, Expression, ExprNode,
                   ParentRel, equal_subtree, node_key, normalize, zero)
from .indices import (IndexError_, all_index_names, classify_indices,
                      index_set_of)
from .properties import PropertyRegistry

_SCRIPTS = (ParentRel.SUB, ParentRel.SUPER)


class CommandError(Exception):
    pass


class RuleError(Exception):
    pass


# ---------------------------------------------------------------------------
# Rules

def _rule_index_counts(node: ExprNode, reg, counts):
    for c in node.children:
        if c.parent_rel in _SCRIPTS and not c.name.isdigit() \
                and not reg.is_non_index(c.name):
            counts[c.name] = counts.get(c.name, 0) + 1
        _rule_index_counts(c, reg, counts)


@dataclass
class Rule:
    lhs: ExprNode
    rhs: ExprNode


def _side_frees(side: ExprNode, reg) -> list:
    """Free-index multiset of one rule side; all terms of a sum must agree."""
    terms = side.children if side.name == SUM else [side]
    frees = None
    for t in terms:
        try:
            f = sorted(classify_indices(t, reg).free_names())
        except IndexError_ as err:
            raise RuleError(f"bad rule side: {err}") from err
        if frees is None:
            frees = f
        elif f != frees:
            raise RuleError(f"rule side terms carry different free indices: "
                            f"{frees} vs {f}")
    return frees or []


@dataclass
class RuleSet:
    """Ordered substitution rules; '->' and '=' are synonymous."""

    rules: list

    @classmethod
    def from_expression(cls, e: Expression, reg: PropertyRegistry) -> "RuleSet":
        root = e.root
        if root.name == LIST:
            arrows = root.children
        else:
            arrows = [root]
        rules = []
        for a in arrows:
            if a.name != ARROW or len(a.children) != 2:
                raise RuleError("a rule must have the form lhs -> rhs")
            lhs, rhs = a.children
            lfree = _side_frees(lhs, reg)
            rfree = _side_frees(rhs, reg)
            if lfree != rfree:
                raise RuleError(f"free indices differ between rule sides: "
                                f"{lfree} vs {rfree}")
            rules.append(Rule(lhs, rhs))
        return cls(rules)


@dataclass
class CommandResult:
    expression: Expression
    applied: bool = False
    diagnostics: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Matching

def _is_index_leaf(n: ExprNode) -> bool:
    return n.parent_rel in _SCRIPTS and not n.children


def _match_structure(pat: ExprNode, node: ExprNode, bind: dict) -> bool:
    if pat.name != node.name or len(pat.children) != len(node.children):
        return False
    for pc, nc in zip(pat.children, node.children):
        if pc.parent_rel is not nc.parent_rel:
            return False
        if _is_index_leaf(pc) and _is_index_leaf(nc):
            bound = bind.get(pc.name)
            if bound is None:
                bind[pc.name] = nc.name
            elif bound != nc.name:
                return False
        elif not _match_structure(pc, nc, bind):
            return False
    return True


def _pattern_variants(reg, lhs: ExprNode):
    """The lhs itself, then its images under the head's mono-term symmetry
    group (with signs), so declared-symmetric factors match in any slot
    order."""
    yield lhs, 1
    scripts = lhs.script_children()
    if len(lhs.children) != len(scripts):
        return
    group = mono_term_group(reg, lhs, len(scripts))
    if len(group) <= 1:
        return
    for perm, sign in group:
        if perm == tuple(range(len(perm))):
            continue
        variant = lhs.copy()
        names = [c.name for c in variant.children]
        for j in range(len(perm)):
            variant.children[j].name = names[perm[j]]
        yield variant, sign


def _match_rule_at(reg, rule: Rule, node: ExprNode):
    """Try to match a rule lhs at this node; returns (bindings, sign) or
    None.  Multiplier-insensitive on the roots."""
    for variant, sign in _pattern_variants(reg, rule.lhs):
        bind: dict = {}
        if _match_structure(variant, node, bind):
            return bind, sign
    return None


def _instantiate(rhs: ExprNode, bind: dict) -> ExprNode:
    out = rhs.copy()
    for n in out.walk():
        for c in n.children:
            if c.parent_rel in _SCRIPTS and c.name in bind:
                c.name = bind[c.name]
    return out


def instantiate_rule(rhs: ExprNode, bind: dict, host: ExprNode | None,
                     reg) -> ExprNode:
    """Instantiate a rule rhs: rule-internal dummies are renamed away from
    the host's names and the bound values first, then bound indices are
    substituted.  Renaming first avoids capture (a rhs dummy colliding with
    a bound value)."""
    from .indices import fresh_dummy
    counts: dict = {}
    _rule_index_counts(rhs, reg, counts)
    in_use = set(bind.values())
    if host is not None:
        in_use |= all_index_names(host, reg)
    # Bound pattern names disappear on substitution; only the rule's own
    # surviving names block the fresh-name pool.
    avoid = in_use | {n for n in counts if n not in bind}
    mapping: dict = {}
    for name in counts:
        if name in bind:
            continue
        if name in in_use:
            iset = index_set_of(reg, name)
            if iset is None:
                continue
            new = fresh_dummy(iset, avoid)
            mapping[name] = new
            avoid.add(new)
    out = rhs.copy()
    for n in out.walk():
        for c in n.children:
            if c.parent_rel in _SCRIPTS:
                if c.name in mapping:
                    c.name = mapping[c.name]
                elif c.name in bind:
                    c.name = bind[c.name]
    return out


def substitute(e: Expression, rules: RuleSet, reg: PropertyRegistry) -> CommandResult:
    """Replace every subtree matching a rule lhs by the instantiated rhs,
    outermost first, one pass per nesting level; inserted dummies are
    relabelled against the surrounding term so no clash survives."""
    e = normalize(e)
    root = e.root.copy()
    applied = [False]

    def pass_term(term: ExprNode) -> ExprNode:
        hole = ExprNode("\\hole")

        def visit(node: ExprNode, parent, idx) -> bool:
            # Returns True when the node was replaced (don't descend).
            for rule in rules.rules:
                hit = _match_rule_at(reg, rule, node)
                if hit is None:
                    continue
                bind, sign = hit
                mult = node.multiplier * sign
                rel = node.parent_rel
                if parent is None:
                    return False  # handled by caller for the term root
                parent.children[idx] = hole
                instance = instantiate_rule(rule.rhs, bind, term, reg)
                instance.multiplier *= mult
                instance.parent_rel = rel
                parent.children[idx] = instance
                applied[0] = True
                return True
            for i, c in enumerate(list(node.children)):
                visit(c, node, i)
            return False

        # The term root itself may match (e.g. rule on a bare symbol).
        for rule in rules.rules:
            hit = _match_rule_at(reg, rule, term)
            if hit is not None:
                bind, sign = hit
                instance = instantiate_rule(rule.rhs, bind, None, reg)
                instance.multiplier *= term.multiplier * sign
                instance.parent_rel = term.parent_rel
                applied[0] = True
                return instance
        for i, c in enumerate(list(term.children)):
            visit(c, term, i)
        return term

    if root.name == SUM:
        root.children = [pass_term(t) for t in root.children]
    else:
        root = pass_term(root)
    return CommandResult(normalize(Expression(root)), applied[0])


# ---------------------------------------------------------------------------
# Distribution and derivatives

def _distribute_node(n: ExprNode) -> ExprNode:
    n.children = [_distribute_node(c) for c in n.children]
    if n.name != PROD or not any(c.name == SUM for c in n.children):
        return n
    terms = [(n.multiplier, [])]
    for c in n.children:
        if c.name == SUM:
            terms = [(m * t.multiplier, fs + [t])
                     for m, fs in terms for t in c.children]
        else:
            terms = [(m, fs + [c]) for m, fs in terms]
    out_terms = []
    for m, fs in terms:
        fs = [f.copy() for f in fs]
        for f in fs:
            f.multiplier = Fraction(1)
            f.parent_rel = ParentRel.ARG
        t = ExprNode(PROD, multiplier=m, parent_rel=ParentRel.ARG, children=fs)
        out_terms.append(t)
    return ExprNode(SUM, parent_rel=n.parent_rel, children=out_terms)


def distribute(e: Expression) -> Expression:
    """Expand products over sums; factor order is preserved per term."""
    e = normalize(e)
    return normalize(Expression(_distribute_node(e.root.copy())))


def _prodrule_node(n: ExprNode, reg) -> ExprNode:
    n.children = [_prodrule_node(c, reg) for c in n.children]
    if not reg.is_derivative(n):
        return n
    args = n.arg_children()
    if len(args) != 1:
        return n
    arg = args[0]
    ai = n.children.index(arg)
    if arg.name == SUM:
        # Derivatives are linear; split over the argument's terms.
        out = []
        for t in arg.children:
            d = n.copy()
            tt = t.copy()
            mult = tt.multiplier
            tt.multiplier = Fraction(1)
            tt.parent_rel = ParentRel.ARG
            d.children[ai] = tt
            d.multiplier = n.multiplier * mult
            d.parent_rel = ParentRel.ARG
            out.append(_prodrule_node(d, reg))
        return ExprNode(SUM, parent_rel=n.parent_rel, children=out)
    if arg.name != PROD:
        return n
    factors = arg.children
    out = []
    for i in range(len(factors)):
        new_factors = []
        for j, f in enumerate(factors):
            fj = f.copy()
            fj.parent_rel = ParentRel.ARG
            if j == i:
                d = n.copy()
                inner = fj
                inner.parent_rel = ParentRel.ARG
                d.children[ai] = inner
                d.multiplier = Fraction(1)
                d.parent_rel = ParentRel.ARG
                new_factors.append(d)
            else:
                new_factors.append(fj)
        out.append(ExprNode(PROD, multiplier=n.multiplier * arg.multiplier,
                            parent_rel=ParentRel.ARG, children=new_factors))
    return ExprNode(SUM, parent_rel=n.parent_rel, children=out)


def prodrule(e: Expression, reg: PropertyRegistry) -> Expression:
    """Leibniz rule: expand derivatives over products (and over sums by
    linearity); no sign is introduced, factor order is preserved."""
    e = normalize(e)
    return normalize(Expression(_prodrule_node(e.root.copy(), reg)))


def pintegrate(e: Expression, reg: PropertyRegistry,
               deriv_name: str | None = None) -> Expression:
    """Integration by parts: per term, move the first derivative factor off
    its argument onto the product of the remaining factors, with a minus sign
    and commutation signs for the move; total derivatives drop."""
    e = normalize(e)
    root = e.root.copy()

    def transform_term(term: ExprNode) -> ExprNode:
        if term.name != PROD:
            if reg.is_derivative(term) and term.arg_children() and \
                    (deriv_name is None or term.name == deriv_name):
                return zero()
            return term
        factors = term.children
        di = None
        for i, f in enumerate(factors):
            if reg.is_derivative(f) and f.arg_children() and \
                    (deriv_name is None or f.name == deriv_name):
                di = i
                break
        if di is None:
            return term
        d = factors[di]
        others = [f for j, f in enumerate(factors) if j != di]
        if not others:
            return zero()
        sign = 1
        for f in factors[:di]:
            s = reg.commutation_sign(d, f)
            if s is None:
                raise CommandError(
                    f"cannot move '{d.name}' past '{f.name}': undefined "
                    f"commutation")
            sign *= s
        args = d.arg_children()
        x = args[0].copy() if len(args) == 1 else \
            ExprNode(PROD, children=[a.copy() for a in args])
        x.parent_rel = ParentRel.ARG
        x.multiplier = Fraction(1)
        new_d = d.copy()
        new_d.children = [c.copy() for c in d.children
                          if c.parent_rel is not ParentRel.ARG]
        if len(others) == 1:
            y = others[0].copy()
        else:
            y = ExprNode(PROD, children=[o.copy() for o in others])
            for c in y.children:
                c.parent_rel = ParentRel.ARG
        y.parent_rel = ParentRel.ARG
        new_d.children.append(y)
        new_d.parent_rel = ParentRel.ARG
        new_d.multiplier = Fraction(1)
        out = ExprNode(PROD, multiplier=-sign * term.multiplier,
                       parent_rel=term.parent_rel, children=[x, new_d])
        return out

    def transform(node: ExprNode) -> ExprNode:
        if node.name == INT:
            node.children = [transform(c) for c in node.children]
            return node
        if node.name == SUM:
            node.children = [transform(c) for c in node.children]
            return node
        return transform_term(node)

    return normalize(Expression(transform(root)))


# ---------------------------------------------------------------------------
# Variation

def _vary_sites(node: ExprNode, rules: RuleSet, reg, path, sites):
    for rule in rules.rules:
        if _match_rule_at(reg, rule, node) is not None:
            sites.append(list(path))
            return
    if node.name in (PROD, SUM):
        for i, c in enumerate(node.children):
            path.append(i)
            _vary_sites(c, rules, reg, path, sites)
            path.pop()
    elif node.name == INT or reg.is_derivative(node) or reg.is_accent(node):
        for i, c in enumerate(node.children):
            if c.parent_rel is ParentRel.ARG and c.name != "\\measure":
                path.append(i)
                _vary_sites(c, rules, reg, path, sites)
                path.pop()


def vary(e: Expression, rules: RuleSet, reg: PropertyRegistry) -> Expression:
    """First-order variation: the sum over single-occurrence replacements by
    the matching rule image, distributed linearly through products, sums,
    derivative and accent arguments.  Terms with no matched occurrence
    contribute nothing."""
    e = normalize(e)
    out_terms = []
    for term in e.terms():
        sites: list = []
        _vary_sites(term, rules, reg, [], sites)
        for path in sites:
            varied = term.copy()
            chain = [varied]
            cur = varied
            for i in path:
                cur = cur.children[i]
                chain.append(cur)
            # Sum branches not on the path drop out of this variation.
            for k, nd in enumerate(chain[:-1]):
                if nd.name == SUM:
                    nd.children = [chain[k + 1]]
            site = chain[-1]
            hit = None
            for rule in rules.rules:
                hit = _match_rule_at(reg, rule, site)
                if hit is not None:
                    break
            bind, sign = hit
            if len(chain) == 1:
                instance = instantiate_rule(rule.rhs, bind, None, reg)
                instance.multiplier *= site.multiplier * sign
                instance.parent_rel = ParentRel.ARG
                out_terms.append(instance)
                continue
            parent = chain[-2]
            idx = parent.children.index(site)
            parent.children[idx] = ExprNode("\\hole",
                                            parent_rel=site.parent_rel)
            instance = instantiate_rule(rule.rhs, bind, varied, reg)
            instance.multiplier *= site.multiplier * sign
            instance.parent_rel = site.parent_rel
            parent.children[idx] = instance
            varied.parent_rel = ParentRel.ARG
            out_terms.append(varied)
    if not out_terms:
        return Expression(zero())
    if len(out_terms) == 1:
        out_terms[0].parent_rel = ParentRel.NONE
        return normalize(Expression(out_terms[0]))
    return normalize(Expression(ExprNode(SUM, children=out_terms)))


# ---------------------------------------------------------------------------
# Collection and sorting

def collect_terms(e: Expression) -> Expression:
    """Merge structurally equal terms (multiplier-insensitive), adding their
    multipliers; zero sums collapse to the 0 node."""
    e = normalize(e)
    root = e.root
    if root.name != SUM:
        return e
    order = []
    acc: dict = {}
    reps: dict = {}
    for t in root.children:
        key = node_key(t, with_multiplier=False)
        if key not in acc:
            acc[key] = Fraction(0)
            reps[key] = t
            order.append(key)
        acc[key] += t.multiplier
    out = []
    for key in order:
        if acc[key] == 0:
            continue
        t = reps[key].copy()
        t.multiplier = acc[key]
        t.parent_rel = ParentRel.ARG
        out.append(t)
    if not out:
        return Expression(zero())
    return normalize(Expression(ExprNode(SUM, children=out)))


def prodsort(e: Expression, reg: PropertyRegistry) -> Expression:
    """Sort factors by (SortOrder position, name, index count) via signed
    adjacent transpositions; undefined pairs never cross."""
    e = normalize(e)

    def visit(n: ExprNode) -> ExprNode:
        n.children = [visit(c) for c in n.children]
        if n.name == PROD:
            factors, sign = sort_factors(n.children, reg)
            n.children = factors
            n.multiplier *= sign
        return n

    return normalize(Expression(visit(e.root.copy())))


def indexsort(e: Expression, reg: PropertyRegistry) -> Expression:
    """Cheap local pass: permute each factor's own indices toward sorted
    order using only its mono-term symmetry, tracking the sign."""
    from .canonical import NamingContext
    e = normalize(e)
    ctx = NamingContext(reg, ())

    def sort_factor(f: ExprNode) -> int:
        sign = 1
        for c in f.children:
            if c.parent_rel is ParentRel.ARG:
                sign *= sort_factor(c)
        scripts = f.script_children()
        if len(f.children) != len(scripts) or len(scripts) < 2:
            return sign
        if any(c.children or c.name.isdigit() or reg.is_non_index(c.name)
               for c in scripts):
            return sign
        group = mono_term_group(reg, f, len(scripts))
        if len(group) <= 1:
            return sign
        contents = tuple(ctx.base_of(c.name) for c in scripts)
        varbits = tuple(0 if c.parent_rel is ParentRel.SUB else 1
                        for c in scripts)
        from .canonical import restrict_to_variance
        group = restrict_to_variance(group, varbits)
        templates = make_templates(contents, group)
        if templates is None:
            return 0
        best, s = min(templates)
        for c, b in zip(scripts, best):
            c.name = ctx.name_of_base(b)
        return sign * s

    root = e.root.copy()
    out_terms = []
    for term in (root.children if root.name == SUM else [root]):
        s = 1
        for f in (term.children if term.name == PROD else [term]):
            s *= sort_factor(f)
        term.multiplier *= s
        out_terms.append(term)
    if root.name == SUM:
        root.children = out_terms
    else:
        root = out_terms[0]
    return normalize(Expression(root))


def list_sum(e: Expression, reg: PropertyRegistry | None = None) -> Expression:
    """Sum the entries of a list node; entries must share free indices."""
    e = normalize(e)
    root = e.root
    if root.name != LIST:
        raise CommandError("list_sum needs a list expression")
    if reg is not None:
        frees = None
        for entry in root.children:
            first = entry.children[0] if entry.name == SUM else entry
            f = sorted(classify_indices(first, reg).free_names())
            if frees is None:
                frees = f
            elif f != frees:
                raise CommandError(f"list entries carry different free "
                                   f"indices: {frees} vs {f}")
    terms = []
    for entry in root.children:
        t = entry.copy()
        t.parent_rel = ParentRel.ARG
        terms.append(t)
    return normalize(Expression(ExprNode(SUM, children=terms)))

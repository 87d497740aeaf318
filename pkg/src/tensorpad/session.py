"""Interactive session: named expressions, the registry, command dispatch,
script running and the machine protocol hooks.

A logical line is a property declaration, an assignment, an @command or a
bare expression.  '%' names the most recent assignment or command target;
"@(label)" splices a bound expression into the input before evaluation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from . import algorithms as alg
from . import young
from .algorithms import CommandError, RuleSet
from .canonical import CanonicalError, canonicalise
from .expr import (LIST, SPLICE, Expression, ExprNode, ParentRel,
                   equal_subtree, normalize)
from .indices import IndexError_, rename_dummies
from .notation import ParseError, parse, parse_line, print_tex, split_source
from .properties import (DEPENDS, INDICES, INTEGER, KNOWN_KINDS,
                         LIST_ATTACHED, POST_DEFAULT_RULES, TABLEAU,
                         DeclarationError, Pattern, PropertyRegistry,
                         make_record)

_UNIMPLEMENTED = {"join", "rewrite_diracbar", "spinorsort"}

# '!' repeats a command until its result stops changing.  Idempotent commands
# reach that fixpoint after one application, so repeating them is pure cost;
# only genuine rewriting commands iterate.
_REPEATABLE = {"substitute", "distribute", "prodrule"}

_DEFAULT_POST_RULES = ["prodsort", "rename_dummies", "canonicalise",
                       "collect_terms"]


class SessionError(Exception):
    pass


@dataclass
class ProtocolMessage:
    id: int
    kind: str       # input | output | error | status
    body: str
    tex: str = ""


def _build_record(kind: str, args: dict):
    if kind not in KNOWN_KINDS:
        raise DeclarationError(f"unknown property '{kind}'")
    positional = args.get("positional", [])
    rec_args: dict = {}
    if kind == INDICES:
        rec_args["set"] = positional[0] if positional else \
            args.get("name", "indices")
    elif kind == INTEGER:
        if positional and isinstance(positional[0], tuple):
            rec_args["range"] = positional[0]
    elif kind == DEPENDS:
        rec_args["symbols"] = tuple(
            Pattern.from_node(parse(str(p)).root) for p in positional)
    elif kind == TABLEAU:
        rec_args["shape"] = args.get("shape")
        rec_args["indices"] = args.get("indices")
    else:
        for k, v in args.items():
            if k != "positional":
                rec_args[k] = v
    return make_record(kind, rec_args)


class Session:
    """One interactive computation: registry + bindings + history."""

    def __init__(self, default_rules: bool = False):
        self.registry = PropertyRegistry()
        self.bindings: dict[str, Expression] = {}
        self.current_label: str | None = None
        self.current_expr: Expression | None = None
        self.default_post_rules: list[str] = \
            list(_DEFAULT_POST_RULES) if default_rules else []
        self.history: list[tuple[str, str]] = []

    # -- helpers ---------------------------------------------------------

    def _splice(self, e: Expression) -> Expression:
        def walk(n: ExprNode) -> ExprNode:
            if n.name == SPLICE:
                label = n.children[0].name
                if label not in self.bindings:
                    raise SessionError(f"no expression bound to '{label}'")
                repl = self.bindings[label].root.copy()
                repl.multiplier *= n.multiplier
                repl.parent_rel = n.parent_rel
                return repl
            n.children = [walk(c) for c in n.children]
            return n
        return normalize(Expression(walk(e.root.copy())))

    def _parse_expr(self, text: str) -> Expression:
        return self._splice(parse(text, self.registry))

    def _parse_rules(self, text: str) -> RuleSet:
        """Rule arguments may be comma-separated without braces."""
        depth = 0
        for ch in text:
            if ch in "({[":
                depth += 1
            elif ch in ")}]":
                depth -= 1
            elif ch == "," and depth == 0:
                text = "{" + text + "}"
                break
        return RuleSet.from_expression(self._parse_expr(text), self.registry)

    def _resolve_target(self, target: str) -> Expression:
        if target == "%":
            if self.current_expr is None:
                raise SessionError("no current expression for '%'")
            return self.current_expr
        if target in self.bindings:
            return self.bindings[target]
        raise SessionError(f"no expression bound to '{target}'")

    # -- commands --------------------------------------------------------

    def _map_entries(self, e: Expression, fn) -> Expression:
        """Apply a per-expression command to each entry of a list node."""
        if e.root.name == LIST:
            out = ExprNode(LIST)
            for c in e.root.children:
                r = fn(Expression(c.copy())).root
                r.parent_rel = ParentRel.ARG
                out.children.append(r)
            return Expression(out)
        return fn(e)

    def _apply_command(self, name: str, e: Expression, groups: list) -> Expression:
        reg = self.registry
        if name == "substitute":
            if not groups:
                raise SessionError("@substitute needs a rule argument")
            rules = self._parse_rules(groups[0])
            return self._map_entries(
                e, lambda x: alg.substitute(x, rules, reg).expression)
        if name == "vary":
            if not groups:
                raise SessionError("@vary needs a rule argument")
            rules = self._parse_rules(groups[0])
            return alg.vary(e, rules, reg)
        if name == "distribute":
            return self._map_entries(e, alg.distribute)
        if name == "prodrule":
            return self._map_entries(e, lambda x: alg.prodrule(x, reg))
        if name == "pintegrate":
            deriv = groups[0].strip() if groups else None
            return alg.pintegrate(e, reg, deriv)
        if name == "collect_terms":
            return self._map_entries(e, alg.collect_terms)
        if name == "prodsort":
            return self._map_entries(e, lambda x: alg.prodsort(x, reg))
        if name == "indexsort":
            return self._map_entries(e, lambda x: alg.indexsort(x, reg))
        if name == "canonicalise":
            return self._map_entries(e, lambda x: canonicalise(x, reg))
        if name == "rename_dummies":
            return self._map_entries(
                e, lambda x: Expression(rename_dummies(x.root, reg)))
        if name == "young_project":
            return self._map_entries(e, lambda x: young.young_project(x, reg))
        if name == "reduce_sum":
            return young.reduce_sum(e, reg)
        if name == "list_sum":
            return alg.list_sum(e, reg)
        if name == "asym":
            if not groups:
                raise SessionError("@asym needs the index list")
            specs = []
            for part in groups[0].split(","):
                part = part.strip()
                m = re.fullmatch(r"(\^|_)\{\s*([^}]+?)\s*\}", part)
                if m:
                    specs.append((m.group(2), m.group(1)))
                elif part:
                    specs.append((part, None))
            return young.asym(e, specs, reg)
        if name == "all_contractions":
            monos = young.all_contractions(e, reg)
            out = ExprNode(LIST)
            for mexp in monos:
                r = mexp.root.copy()
                r.parent_rel = ParentRel.ARG
                out.children.append(r)
            return Expression(out)
        if name == "decompose":
            if not groups:
                raise SessionError("@decompose needs a basis argument")
            basis_expr = self._parse_expr(groups[0])
            if basis_expr.root.name != LIST:
                raise SessionError("@decompose basis must be a list")
            elements = [Expression(c.copy()) for c in basis_expr.root.children]
            basis = young.build_basis(elements, reg)
            coeffs = young.decompose(e, basis, reg)
            out = ExprNode(LIST)
            for c in coeffs:
                out.children.append(ExprNode("1", multiplier=Fraction(c),
                                             parent_rel=ParentRel.ARG))
            return Expression(out)
        if name in _UNIMPLEMENTED:
            raise SessionError(f"unimplemented command '@{name}'")
        raise SessionError(f"unknown command '@{name}'")

    def describe_properties(self, symbol_text: str) -> str:
        """Debugging aid: every property record attached to a symbol."""
        node = parse(symbol_text, self.registry).root
        records = self.registry.properties_of(node)
        if not records:
            return f"{symbol_text.strip()}: no properties"
        parts = []
        for rec in records:
            args = ", ".join(f"{k}={v}" for k, v in rec.args)
            parts.append(rec.kind + (f"({args})" if args else ""))
        return f"{symbol_text.strip()}: " + ", ".join(parts)

    def _run_post_rules(self, e: Expression) -> Expression:
        for name in self.default_post_rules:
            e = self._apply_command(name, e, [])
        return e

    # -- evaluation ------------------------------------------------------

    def eval_line(self, text: str, terminator: str = ";") -> str:
        plain, _tex = self.eval_line_detail(text, terminator)
        return plain

    def eval_line_detail(self, text: str, terminator: str = ";"):
        """Evaluate one logical line; returns (plain echo, tex form).  On
        error the session state is untouched."""
        try:
            line = parse_line(text, terminator)
            if line.kind == "PropertyDeclaration":
                out = self._eval_declaration(line)
            elif line.kind == "Assignment":
                out = self._eval_assignment(line)
            elif line.kind == "Command":
                out = self._eval_command(line)
            else:
                out = self._eval_literal(line)
        except (ParseError, DeclarationError, CommandError, CanonicalError,
                IndexError_, alg.RuleError, young.SymmetryError,
                young.BasisError, SessionError) as err:
            raise SessionError(str(err)) from err
        self.history.append((text.strip(), out[0]))
        return out

    def _eval_declaration(self, line):
        if line.property_name == POST_DEFAULT_RULES:
            names = []
            for item in line.args.get("positional", []):
                m = re.match(r"@@?([a-zA-Z_]+)", str(item))
                if not m:
                    raise SessionError(f"bad default rule '{item}'")
                names.append(m.group(1))
            self.default_post_rules = names
            return ("", "")
        record = _build_record(line.property_name, line.args)
        self.registry = self.registry.declare(line.patterns, record)
        return ("", "")

    def _eval_assignment(self, line):
        expr = self._parse_expr(line.expr_text)
        self.bindings[line.label] = expr
        self.current_label = line.label
        self.current_expr = expr
        tex = print_tex(expr)
        plain = f"{line.label}:= {tex};" if line.echo else ""
        return (plain, tex)

    def _eval_literal(self, line):
        expr = self._parse_expr(line.expr_text)
        self.current_label = None
        self.current_expr = expr
        tex = print_tex(expr)
        plain = f"{tex};" if line.echo else ""
        return (plain, tex)

    def _eval_command(self, line):
        if line.command == "properties":
            info = self.describe_properties(line.target)
            return (info if line.echo else "", "")
        expr = self._resolve_target(line.target)
        result = self._apply_command(line.command, expr, line.arg_groups)
        if line.bang and line.command in _REPEATABLE:
            for _ in range(100):
                again = self._apply_command(line.command, result,
                                            line.arg_groups)
                if equal_subtree(again.root, result.root):
                    break
                result = again
        if self.default_post_rules and \
                line.command not in ("decompose", "all_contractions"):
            result = self._run_post_rules(result)
        if line.target != "%":
            self.bindings[line.target] = result
            self.current_label = line.target
        else:
            if self.current_label is not None:
                self.bindings[self.current_label] = result
        self.current_expr = result
        tex = print_tex(result)
        label = self.current_label
        if line.echo:
            plain = f"{label}:= {tex};" if label else f"{tex};"
        else:
            plain = ""
        return (plain, tex)


# ---------------------------------------------------------------------------
# Script runner

def run_script(path: str, default_rules: bool = False,
               keep_going: bool = False, session: Session | None = None):
    """Evaluate a script file line by line; returns (exit_status,
    transcript).  Stops at the first error unless keep_going."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        return 1, f"error: {err}\n"
    session = session or Session(default_rules=default_rules)
    transcript = []
    status = 0
    for body, line_no, terminator in split_source(text):
        try:
            out = session.eval_line(body, terminator)
            if out:
                transcript.append(out)
        except SessionError as err:
            transcript.append(f"error: line {line_no}: {err}")
            status = 1
            if not keep_going:
                break
    return status, "".join(t + "\n" for t in transcript)


def replay(history, default_rules: bool = False) -> Session:
    """Rebuild a session from recorded input lines."""
    session = Session(default_rules=default_rules)
    for item in history:
        text = item[0] if isinstance(item, tuple) else item
        session.eval_line(text)
    return session

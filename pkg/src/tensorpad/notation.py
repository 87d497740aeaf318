"""TeX-subset reader and printer.

The input language covers exactly what field-theory scratch work needs:
control-sequence and letter names, ``_{...}``/``^{...}`` index groups with
space-separated indices, parenthesised arguments, juxtaposition products,
``+``/``-`` sums, integer and ``p/q`` rational prefixes, ``{...}`` lists,
``->``/``=`` rules, and the three line shapes ``pattern::Property(args)``,
``label := expr`` and ``@command!(target)(args)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .expr import (ARROW, INT, LIST, MEASURE, PROD, SPLICE, SUM, Expression,
                   ExprNode, ParentRel, normalize, number)
from .properties import Pattern

__all__ = ["ParseError", "SourceLine", "parse", "parse_line", "print_tex",
           "split_source"]


class ParseError(Exception):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.message = message
        self.position = position


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(r"""
    (?P<name>\\[a-zA-Z]+\#?|[a-zA-Z][a-zA-Z0-9]*\#?|\#)
  | (?P<num>[0-9]+)
  | (?P<op>::|:=|->|\.\.|@@|[{}()^_+\-*/,;.=@%!])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str   # name | num | op | end
    text: str
    pos: int
    glued: bool  # no whitespace between this token and the previous one


def _lex(text: str) -> list[Token]:
    tokens = []
    i = 0
    glued = False
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            glued = False
            i += 1
            continue
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {ch!r}", i)
        kind = m.lastgroup
        tokens.append(Token(kind, m.group(), i, glued))
        glued = True
        i = m.end()
    tokens.append(Token("end", "", len(text), False))
    return tokens


# ---------------------------------------------------------------------------
# Expression parser

class _Parser:
    def __init__(self, text: str, reg=None):
        self.text = text
        self.toks = _lex(text)
        self.at = 0
        self.reg = reg

    def peek(self) -> Token:
        return self.toks[self.at]

    def next(self) -> Token:
        t = self.toks[self.at]
        self.at += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text!r} "
                             f"{'at end of input' if t.kind == 'end' else ''}".strip(),
                             t.pos)
        return t

    def error(self, msg: str):
        raise ParseError(msg, self.peek().pos)

    # relation := additive (('->' | '=') additive)?
    def relation(self) -> ExprNode:
        lhs = self.additive()
        if self.peek().text in ("->", "="):
            self.next()
            rhs = self.additive()
            lhs.parent_rel = ParentRel.ARG
            rhs.parent_rel = ParentRel.ARG
            return ExprNode(ARROW, children=[lhs, rhs])
        return lhs

    # additive := term (('+'|'-') term)*
    def additive(self) -> ExprNode:
        terms = [self.term()]
        while self.peek().text in ("+", "-"):
            op = self.next().text
            t = self.term()
            if op == "-":
                t.multiplier = -t.multiplier
            terms.append(t)
        if len(terms) == 1:
            return terms[0]
        for t in terms:
            t.parent_rel = ParentRel.ARG
        return ExprNode(SUM, children=terms)

    # term := ['-'|'+'] factor+
    def term(self) -> ExprNode:
        sign = 1
        while self.peek().text in ("+", "-"):
            if self.next().text == "-":
                sign = -sign
        factors = [self.factor()]
        while self._starts_factor():
            factors.append(self.factor())
        if len(factors) == 1:
            out = factors[0]
        else:
            for f in factors:
                f.parent_rel = ParentRel.ARG
            out = ExprNode(PROD, children=factors)
        out.multiplier *= sign
        return out

    def _starts_factor(self) -> bool:
        t = self.peek()
        return t.kind in ("name", "num") or t.text in ("(", "{", "@")

    def factor(self) -> ExprNode:
        t = self.peek()
        if t.kind == "num":
            return self.rational()
        if t.text == "(":
            self.next()
            inner = self.relation()
            self.expect(")")
            return inner
        if t.text == "{":
            return self.list_node()
        if t.text == "@":
            self.next()
            self.expect("(")
            name = self.next()
            if name.kind != "name":
                raise ParseError("expected a label inside @(...)", name.pos)
            self.expect(")")
            child = ExprNode(name.text, parent_rel=ParentRel.ARG)
            return ExprNode(SPLICE, children=[child])
        if t.kind == "name":
            if t.text == "\\int":
                self.next()
                return self.integral()
            return self.named()
        self.error(f"expected an expression, found {t.text!r}" if t.kind != "end"
                   else "unexpected end of input")

    def rational(self) -> ExprNode:
        t = self.next()
        value = Fraction(int(t.text))
        if self.peek().text == "/":
            self.next()
            d = self.next()
            if d.kind != "num":
                raise ParseError("malformed rational: expected an integer "
                                 "denominator", d.pos)
            value = value / int(d.text)
        return number(value)

    def list_node(self) -> ExprNode:
        self.expect("{")
        if self.peek().text == "}":
            self.error("empty list")
        items = [self.relation()]
        while self.peek().text == ",":
            self.next()
            items.append(self.relation())
        self.expect("}")
        for it in items:
            it.parent_rel = ParentRel.ARG
        return ExprNode(LIST, children=items)

    def named(self) -> ExprNode:
        t = self.next()
        node = ExprNode(t.text)
        grabs_args = self.reg is not None and (
            self.reg.is_derivative(node) or self.reg.is_accent(node))
        while True:
            nxt = self.peek()
            if nxt.text in ("_", "^"):
                self.next()
                rel = ParentRel.SUB if nxt.text == "_" else ParentRel.SUPER
                for idx in self.script_group():
                    idx.parent_rel = rel
                    node.children.append(idx)
            elif nxt.text == "{" and (nxt.glued or grabs_args):
                self.next()
                if self.peek().text == "}":   # TeX spacing idiom T^{a}{}_{b}
                    self.next()
                    continue
                args = [self.relation()]
                while self.peek().text == ",":
                    self.next()
                    args.append(self.relation())
                self.expect("}")
                for a in args:
                    a.parent_rel = ParentRel.ARG
                    node.children.append(a)
            elif nxt.text == "(" and (nxt.glued or grabs_args):
                self.next()
                args = [self.relation()]
                while self.peek().text == ",":
                    self.next()
                    args.append(self.relation())
                self.expect(")")
                for a in args:
                    a.parent_rel = ParentRel.ARG
                    node.children.append(a)
            else:
                break
        return node

    def script_group(self) -> list[ExprNode]:
        """Indices after ^ or _: a braced space-separated group or one token."""
        if self.peek().text == "{":
            self.next()
            items = []
            while self.peek().text != "}":
                t = self.next()
                if t.kind not in ("name", "num"):
                    raise ParseError("empty index group" if not items and
                                     t.kind == "end" else
                                     f"bad index {t.text!r}", t.pos)
                items.append(ExprNode(t.text))
            self.next()
            if not items:
                raise ParseError("empty index group", self.toks[self.at - 1].pos)
            return items
        t = self.next()
        if t.kind not in ("name", "num"):
            raise ParseError("expected an index", t.pos)
        return [ExprNode(t.text)]

    def integral(self) -> ExprNode:
        node = ExprNode(INT)
        measure = self.measure()
        if measure is not None:
            measure.parent_rel = ParentRel.ARG
            node.children.append(measure)
        factors = [self.factor()]
        while self._starts_factor():
            factors.append(self.factor())
        if len(factors) == 1:
            integrand = factors[0]
        else:
            for f in factors:
                f.parent_rel = ParentRel.ARG
            integrand = ExprNode(PROD, children=factors)
        integrand.parent_rel = ParentRel.ARG
        node.children.append(integrand)
        return node

    def measure(self) -> ExprNode | None:
        """d^nx | d^4x | d^{n}x immediately after \\int; inert marker."""
        t = self.peek()
        if t.kind != "name" or t.text != "d":
            return None
        if self.toks[self.at + 1].text != "^":
            return None
        self.next()
        self.next()
        nxt = self.next()
        if nxt.text == "{":
            dim = self.next().text
            self.expect("}")
            coord = self.next().text
        elif nxt.kind == "num":
            dim = nxt.text
            coord = self.next().text
        elif nxt.kind == "name" and len(nxt.text) > 1:
            dim, coord = nxt.text[0], nxt.text[1:]
        else:
            dim = nxt.text
            coord = self.next().text
        return ExprNode(MEASURE, children=[
            ExprNode(dim, parent_rel=ParentRel.ARG),
            ExprNode(coord, parent_rel=ParentRel.ARG)])


def parse(text: str, reg=None) -> Expression:
    """Parse one expression; raises ParseError with a byte offset."""
    p = _Parser(text, reg)
    root = p.relation()
    t = p.peek()
    if t.kind != "end":
        raise ParseError(f"trailing input {t.text!r}", t.pos)
    return normalize(Expression(root))


# ---------------------------------------------------------------------------
# Printer

def _print_rational(q: Fraction) -> str:
    return str(q)


def _mult_prefix(q: Fraction, body: str) -> str:
    if q == 1:
        return body
    if q == -1:
        return "-" + body
    return f"{_print_rational(q)} {body}"


def _print_scripts_and_args(n: ExprNode) -> str:
    out = [n.name]
    i = 0
    kids = n.children
    while i < len(kids):
        rel = kids[i].parent_rel
        if rel in (ParentRel.SUB, ParentRel.SUPER):
            j = i
            while j < len(kids) and kids[j].parent_rel is rel:
                j += 1
            mark = "_" if rel is ParentRel.SUB else "^"
            names = " ".join(_print_factor(k, bare=True) for k in kids[i:j])
            out.append(f"{mark}{{{names}}}")
            i = j
        else:
            j = i
            while j < len(kids) and kids[j].parent_rel is ParentRel.ARG:
                j += 1
            inner = ", ".join(_print_node(k) for k in kids[i:j])
            out.append(f"({inner})")
            i = j
    return "".join(out)


def _print_factor(n: ExprNode, bare: bool = False) -> str:
    if n.name == SUM:
        return "(" + _print_sum(n) + ")"
    if n.name == LIST:
        return "{" + ", ".join(_print_node(c) for c in n.children) + "}"
    if n.name == SPLICE:
        return f"@({n.children[0].name})"
    if n.name == MEASURE:
        return f"d^{{{n.children[0].name}}}{n.children[1].name}"
    if n.name == INT:
        parts = []
        for c in n.children:
            if c.name == SUM:
                parts.append("(" + _print_sum(c) + ")")
            else:
                parts.append(_print_factor(c))
        return "\\int " + " ".join(parts)
    if n.name == PROD:
        return " ".join(_print_factor(c) for c in n.children)
    if n.is_number():
        return _print_rational(n.multiplier) if bare else "1"
    return _print_scripts_and_args(n)


def _print_term(n: ExprNode) -> str:
    if n.is_number():
        return _print_rational(n.multiplier)
    return _mult_prefix(n.multiplier, _print_factor(n))


def _print_sum(n: ExprNode) -> str:
    parts = [_print_term(n.children[0])]
    for t in n.children[1:]:
        if t.multiplier < 0 or (t.is_number() and t.multiplier < 0):
            flipped = t.copy()
            flipped.multiplier = -flipped.multiplier
            parts.append(" - " + _print_term(flipped))
        else:
            parts.append(" + " + _print_term(t))
    return "".join(parts)


def _print_node(n: ExprNode) -> str:
    if n.name == SUM:
        return _print_sum(n)
    if n.name == ARROW:
        return f"{_print_node(n.children[0])} -> {_print_node(n.children[1])}"
    return _print_term(n)


def print_tex(e: Expression) -> str:
    """Deterministic text form; reparsing yields a structurally equal tree."""
    return _print_node(e.root)


# ---------------------------------------------------------------------------
# Line-level parsing: declarations, assignments, commands

@dataclass
class SourceLine:
    kind: str              # PropertyDeclaration | Assignment | Command | ExpressionLiteral
    raw: str
    echo: bool             # ';' requests echo, '.' suppresses it
    patterns: list = field(default_factory=list)      # declarations
    property_name: str = ""                           # declarations
    args: dict = field(default_factory=dict)          # declarations
    label: str = ""                                   # assignments
    expr_text: str = ""                               # assignments / literals
    command: str = ""                                 # commands
    bang: bool = False                                # @cmd! vs @cmd
    target: str = ""                                  # % or a label
    arg_groups: list = field(default_factory=list)    # raw texts of (…)/{…}


def split_source(text: str) -> list[tuple[str, int, str]]:
    """Split a script into logical lines: (body, 1-based line number,
    terminator).  Lines end at ';' or at '.' outside brackets; newlines
    inside a logical line are whitespace."""
    out = []
    depth = 0
    buf = []
    line_no = 1
    start_line = 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line_no += 1
        if ch in "({[":
            depth += 1
        elif ch in ")}]":
            depth -= 1
        if depth == 0 and ch == ";":
            body = "".join(buf).strip()
            if body:
                out.append((body, start_line, ";"))
            buf = []
            start_line = line_no
            i += 1
            continue
        if depth == 0 and ch == "." and \
                (i + 1 == len(text) or text[i + 1] not in ".0123456789") and \
                (i == 0 or text[i - 1] != "."):
            body = "".join(buf).strip()
            if body:
                out.append((body, start_line, "."))
            buf = []
            start_line = line_no
            i += 1
            continue
        if not buf:
            if ch.isspace():
                i += 1
                continue
            if ch == "%" and text.startswith("%%", i):
                while i < len(text) and text[i] != "\n":
                    i += 1
                continue
            start_line = line_no
        buf.append(ch)
        i += 1
    tail = "".join(buf).strip()
    if tail:
        out.append((tail, start_line, ";"))
    return out


def _split_top(text: str, sep: str) -> list[str]:
    parts, depth, buf = [], 0, []
    for ch in text:
        if ch in "({[":
            depth += 1
        elif ch in ")}]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    parts.append("".join(buf))
    return parts


def _parse_arg_value(text: str):
    text = text.strip()
    if re.fullmatch(r"-?[0-9]+", text):
        return int(text)
    m = re.fullmatch(r"([0-9]+)\.\.([0-9]+)", text)
    if m:
        return (int(m.group(1)), int(m.group(2)))
    if text.startswith("{") and text.endswith("}"):
        return tuple(_parse_arg_value(p) for p in _split_top(text[1:-1], ","))
    return text


def _parse_decl_args(text: str) -> dict:
    args: dict = {"positional": []}
    if not text.strip():
        return args
    for part in _split_top(text, ","):
        part = part.strip()
        if not part:
            continue
        if "=" in part and not part.startswith("@"):
            key, _, value = part.partition("=")
            args[key.strip()] = _parse_arg_value(value)
        else:
            args["positional"].append(_parse_arg_value(part))
    return args


def parse_pattern_list(text: str) -> list[Pattern]:
    text = text.strip()
    if text.startswith("{") and text.endswith("}"):
        parts = _split_top(text[1:-1], ",")
    else:
        parts = [text]
    patterns = []
    for part in parts:
        part = part.strip()
        if not part:
            continue
        node = parse(part).root
        patterns.append(Pattern.from_node(node))
    return patterns


_LABEL_RE = re.compile(r"^\s*([a-zA-Z\\][a-zA-Z0-9]*)\s*$")
_COMMAND_RE = re.compile(r"^@(@?)([a-zA-Z_]+)(!?)\s*\(\s*([%a-zA-Z0-9\\]+)\s*\)")


def parse_line(text: str, terminator: str = ";") -> SourceLine:
    """Decode one logical line into its declaration/assignment/command/
    expression shape.  The expression payload is left as raw text so the
    caller can parse it with the live registry."""
    raw = text.strip()
    echo = terminator == ";"

    if raw.startswith("@") and not raw.startswith("@("):
        m = _COMMAND_RE.match(raw)
        if not m:
            raise ParseError("malformed command line", 0)
        rest = raw[m.end():].strip()
        groups = []
        while rest:
            if rest[0] not in "({":
                raise ParseError(f"unexpected command argument {rest!r}",
                                 len(raw) - len(rest))
            close = ")" if rest[0] == "(" else "}"
            depth = 0
            for i, ch in enumerate(rest):
                if ch in "({[":
                    depth += 1
                elif ch in ")}]":
                    depth -= 1
                    if depth == 0:
                        if ch != close:
                            raise ParseError("mismatched brackets in command "
                                             "arguments", len(raw) - len(rest) + i)
                        groups.append(rest[1:i])
                        rest = rest[i + 1:].strip()
                        break
            else:
                raise ParseError("unbalanced command argument group",
                                 len(raw) - len(rest))
        return SourceLine(kind="Command", raw=raw, echo=echo,
                          command=m.group(2), bang=bool(m.group(3)),
                          target=m.group(4), arg_groups=groups)

    if _top_level_contains(raw, "::"):
        head, _, rest = raw.partition("::")
        rest = rest.strip()
        m = re.match(r"^([a-zA-Z]+)\s*(\((.*)\))?\s*$", rest, re.DOTALL)
        if not m:
            raise ParseError(f"malformed property declaration {rest!r}",
                             len(head) + 2)
        patterns = parse_pattern_list(head) if head.strip() else []
        return SourceLine(kind="PropertyDeclaration", raw=raw, echo=echo,
                          patterns=patterns, property_name=m.group(1),
                          args=_parse_decl_args(m.group(3) or ""))

    if _top_level_contains(raw, ":="):
        label, _, body = raw.partition(":=")
        m = _LABEL_RE.match(label)
        if not m:
            raise ParseError(f"bad assignment label {label.strip()!r}", 0)
        return SourceLine(kind="Assignment", raw=raw, echo=echo,
                          label=m.group(1), expr_text=body.strip())

    return SourceLine(kind="ExpressionLiteral", raw=raw, echo=echo,
                      expr_text=raw)


def _top_level_contains(text: str, needle: str) -> bool:
    depth = 0
    for i in range(len(text) - len(needle) + 1):
        ch = text[i]
        if ch in "({[":
            depth += 1
        elif ch in ")}]":
            depth -= 1
        elif depth == 0 and text.startswith(needle, i):
            return True
    return False

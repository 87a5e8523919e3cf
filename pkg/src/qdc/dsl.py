"""Textual language for diagrams and models.

Grammar (whitespace-insensitive, ``#`` comments to end of line)::

    program   := statement*
    statement := "dim" NAME "=" INT ";"
               | "gen" NAME ":" type "->" type ";"
               | "matrix" NAME "=" "[" row ("," row)* "]" ";"
               | "let" NAME "=" expr ";"
               | "check" expr ("==" | "~" | "~~") expr ";"
    type      := "I" | wire+              # tensor by juxtaposition
    wire      := NAME "*"?                # trailing star = dual wire
    expr      := "id" "[" type "]" | "cap" "[" wire "]" | "cup" "[" wire "]"
               | "swap" "[" type "," type "]"
               | "dagger" "(" expr ")" | "transpose" "(" expr ")"
               | "conj" "(" expr ")" | "name" "(" expr ")"
               | "coname" "(" expr ")" | "tr" "(" expr ")"
               | "(" expr (";" expr)+ ")" | "(" expr ("*" expr)+ ")"
               | "(" expr ")" | NAME
    row       := cnum ("," cnum)*
    cnum      := complex literal in a+bi form (also "i", "-2i", "1.5e-3")

``;`` composes sequentially, read left to right; ``*`` composes in
parallel.  A parenthesized chain uses one operator kind; mixing requires
nesting.  ``check`` compares two diagrams when the program is run:
``==`` exactly, ``~`` up to a scalar, ``~~`` up to a phase.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (CONJUGATE, DAGGER, TRANSPOSE, Cap, Cup, Diagram, Gen,
                   GeneratorSig, Id, Par, Seq, Swap, TypingError, Wire,
                   WireType, apply_variant, bipartite_of, trace_shape)
from .semantics import Matrix, Model, Verdict, check_eq

KEYWORDS = {"dim", "gen", "matrix", "let", "check", "id", "cap", "cup",
            "swap", "dagger", "transpose", "conj", "name", "coname", "tr",
            "I", "i"}

CHECK_MODES = {"==": "exact", "~": "up_to_scalar", "~~": "up_to_phase"}


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"

    def merge(self, other: "SourceSpan") -> "SourceSpan":
        return SourceSpan(self.file, self.line, self.col,
                          other.end_line, other.end_col)


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


@dataclass(frozen=True)
class _Token:
    kind: str  # NAME NUM IMAG PUNCT EOF
    text: str
    value: float | None
    span: SourceSpan


_PUNCT2 = ("->", "==", "~~")
_PUNCT1 = "()[],;:*=~+-"


def _lex(text: str, filename: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, i = 1, 1, 0
    n = len(text)

    def span(l0, c0, l1, c1):
        return SourceSpan(filename, l0, c0, l1, c1)

    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        two = text[i:i + 2]
        if two in _PUNCT2:
            tokens.append(_Token("PUNCT", two, None,
                                 span(line, col, line, col + 2)))
            i += 2
            col += 2
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            num_text = text[i:j]
            kind = "NUM"
            if j < n and text[j] == "i":
                kind = "IMAG"
                j += 1
            try:
                value = float(num_text)
            except ValueError:
                raise ParseError(f"bad number literal {num_text!r}",
                                 span(line, col, line, col + (j - i)))
            tokens.append(_Token(kind, text[i:j], value,
                                 span(line, col, line, col + (j - i))))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            tokens.append(_Token("NAME", word, None,
                                 span(line, col, line, col + (j - i))))
            col += j - i
            i = j
            continue
        if ch in _PUNCT1:
            tokens.append(_Token("PUNCT", ch, None,
                                 span(line, col, line, col + 1)))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}",
                         span(line, col, line, col + 1))
    tokens.append(_Token("EOF", "", None, span(line, col, line, col)))
    return tokens


@dataclass(frozen=True)
class CheckStmt:
    lhs: Diagram
    rhs: Diagram
    mode: str
    op: str
    span: SourceSpan


@dataclass
class Program:
    """A parsed and type-checked source file: a model plus named terms."""

    dims: dict[str, int] = field(default_factory=dict)
    sigs: dict[str, GeneratorSig] = field(default_factory=dict)
    matrices: dict[str, np.ndarray] = field(default_factory=dict)
    lets: dict[str, Diagram] = field(default_factory=dict)
    checks: list[CheckStmt] = field(default_factory=list)

    def model(self) -> Model:
        return Model(dict(self.dims), dict(self.matrices))

    def lookup(self, name: str, span: SourceSpan) -> Diagram:
        if name in self.lets:
            return self.lets[name]
        if name in self.sigs:
            return Gen(self.sigs[name])
        raise ParseError(f"undeclared name {name!r}", span)


class _Parser:
    def __init__(self, tokens: list[_Token], program: Program):
        self.tokens = tokens
        self.pos = 0
        self.program = program

    # -- token plumbing ---------------------------------------------------

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> _Token:
        t = self.next()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text or 'end of input'!r}",
                             t.span)
        return t

    def expect_name(self, what: str, allow_keywords: bool = False) -> _Token:
        t = self.next()
        if t.kind != "NAME":
            raise ParseError(f"expected {what}, found {t.text or 'end of input'!r}",
                             t.span)
        if not allow_keywords and t.text in KEYWORDS:
            raise ParseError(f"{t.text!r} is reserved and cannot name a {what}",
                             t.span)
        return t

    # -- statements -------------------------------------------------------

    def parse_program(self) -> Program:
        while self.peek().kind != "EOF":
            self.statement()
        self._validate_matrices()
        return self.program

    def statement(self) -> None:
        t = self.peek()
        if t.text == "dim":
            self.next()
            name = self.expect_name("wire type name")
            self.expect("=")
            num = self.next()
            if num.kind != "NUM" or num.value != int(num.value) or num.value < 1:
                raise ParseError("dimension must be a positive integer",
                                 num.span)
            if name.text in self.program.dims:
                raise ParseError(f"dimension of {name.text!r} already declared",
                                 name.span)
            self.program.dims[name.text] = int(num.value)
            self.expect(";")
            return
        if t.text == "gen":
            self.next()
            name = self.expect_name("generator name")
            self.expect(":")
            dom = self.wire_type()
            self.expect("->")
            cod = self.wire_type()
            if name.text in self.program.sigs or name.text in self.program.lets:
                raise ParseError(f"{name.text!r} already declared", name.span)
            self.program.sigs[name.text] = GeneratorSig(name.text, dom, cod)
            self.expect(";")
            return
        if t.text == "matrix":
            self.next()
            name = self.expect_name("generator name")
            if name.text not in self.program.sigs:
                raise ParseError(
                    f"matrix for undeclared generator {name.text!r}", name.span)
            if name.text in self.program.matrices:
                raise ParseError(f"matrix for {name.text!r} already given",
                                 name.span)
            self.expect("=")
            self.program.matrices[name.text] = self.matrix_literal()
            self.expect(";")
            return
        if t.text == "let":
            self.next()
            name = self.expect_name("binding name")
            if name.text in self.program.lets or name.text in self.program.sigs:
                raise ParseError(f"{name.text!r} already declared", name.span)
            self.expect("=")
            self.program.lets[name.text] = self.expression()
            self.expect(";")
            return
        if t.text == "check":
            start = self.next()
            lhs = self.expression()
            op = self.next()
            if op.text not in CHECK_MODES:
                raise ParseError(
                    "expected '==', '~' or '~~' between checked terms",
                    op.span)
            rhs = self.expression()
            end = self.expect(";")
            if lhs.dom != rhs.dom or lhs.cod != rhs.cod:
                raise ParseError(
                    f"checked terms have different types: "
                    f"[{lhs.dom}] -> [{lhs.cod}] vs [{rhs.dom}] -> [{rhs.cod}]",
                    start.span.merge(end.span))
            self.program.checks.append(CheckStmt(
                lhs, rhs, CHECK_MODES[op.text], op.text,
                start.span.merge(end.span)))
            return
        raise ParseError(
            f"expected a statement, found {t.text or 'end of input'!r}", t.span)

    def _validate_matrices(self) -> None:
        for name, arr in self.program.matrices.items():
            sig = self.program.sigs[name]
            try:
                rows = 1
                for w in sig.cod.wires:
                    rows *= self.program.dims[w.base]
                cols = 1
                for w in sig.dom.wires:
                    cols *= self.program.dims[w.base]
            except KeyError as exc:
                raise ParseError(
                    f"generator {name!r} uses wire type {exc.args[0]!r} "
                    f"with no declared dimension",
                    SourceSpan("<program>", 0, 0, 0, 0))
            if arr.shape != (rows, cols):
                raise ParseError(
                    f"matrix for {name!r} has shape {arr.shape}, but "
                    f"[{sig.dom}] -> [{sig.cod}] needs ({rows}, {cols})",
                    SourceSpan("<program>", 0, 0, 0, 0))

    # -- types ------------------------------------------------------------

    def wire_type(self) -> WireType:
        t = self.peek()
        if t.text == "I":
            self.next()
            return WireType(())
        wires = [self.wire()]
        while self.peek().kind == "NAME" and self.peek().text not in KEYWORDS:
            wires.append(self.wire())
        return WireType(tuple(wires))

    def wire(self) -> Wire:
        name = self.expect_name("wire type name")
        if self.peek().text == "*":
            self.next()
            return Wire(name.text, dual=True)
        return Wire(name.text, dual=False)

    # -- expressions --------------------------------------------------------

    def expression(self) -> Diagram:
        t = self.peek()
        if t.text == "id":
            self.next()
            self.expect("[")
            wt = self.wire_type()
            self.expect("]")
            return Id(wt)
        if t.text in ("cap", "cup"):
            self.next()
            self.expect("[")
            w = self.wire()
            self.expect("]")
            return Cap(w) if t.text == "cap" else Cup(w)
        if t.text == "swap":
            self.next()
            self.expect("[")
            t1 = self.wire_type()
            self.expect(",")
            t2 = self.wire_type()
            self.expect("]")
            return Swap(t1, t2)
        if t.text in ("dagger", "transpose", "conj"):
            self.next()
            self.expect("(")
            inner = self.expression()
            self.expect(")")
            variant = {"dagger": DAGGER, "transpose": TRANSPOSE,
                       "conj": CONJUGATE}[t.text]
            return apply_variant(inner, variant)
        if t.text in ("name", "coname"):
            self.next()
            self.expect("(")
            inner = self.expression()
            close = self.expect(")")
            side = "state" if t.text == "name" else "costate"
            try:
                return bipartite_of(inner, side)
            except TypingError as exc:
                raise ParseError(str(exc), t.span.merge(close.span))
        if t.text == "tr":
            self.next()
            self.expect("(")
            inner = self.expression()
            close = self.expect(")")
            try:
                return trace_shape(inner, "full")
            except TypingError as exc:
                raise ParseError(str(exc), t.span.merge(close.span))
        if t.text == "(":
            open_tok = self.next()
            first = self.expression()
            op = self.peek()
            if op.text == ")":
                self.next()
                return first
            if op.text not in (";", "*"):
                raise ParseError(
                    f"expected ';', '*' or ')' in composite, found "
                    f"{op.text or 'end of input'!r}", op.span)
            parts = [first]
            while self.peek().text == op.text:
                self.next()
                parts.append(self.expression())
            close = self.expect(")")
            out = parts[0]
            for part in parts[1:]:
                try:
                    out = Seq(out, part) if op.text == ";" else Par(out, part)
                except TypingError as exc:
                    raise ParseError(str(exc), open_tok.span.merge(close.span))
            return out
        if t.kind == "NAME" and t.text not in KEYWORDS:
            self.next()
            return self.program.lookup(t.text, t.span)
        raise ParseError(
            f"expected an expression, found {t.text or 'end of input'!r}",
            t.span)

    # -- matrix literals -----------------------------------------------------

    def matrix_literal(self) -> np.ndarray:
        start = self.expect("[")
        rows = [self.matrix_row()]
        while self.peek().text == ",":
            self.next()
            rows.append(self.matrix_row())
        self.expect("]")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ParseError("matrix rows have unequal lengths", start.span)
        return np.array(rows, dtype=complex)

    def matrix_row(self) -> list[complex]:
        self.expect("[")
        out = [self.complex_number()]
        while self.peek().text == ",":
            self.next()
            out.append(self.complex_number())
        self.expect("]")
        return out

    def complex_number(self) -> complex:
        sign = 1.0
        first = self.next()
        if first.text in ("+", "-"):
            sign = -1.0 if first.text == "-" else 1.0
            first = self.next()
        re, im = 0.0, 0.0
        if first.kind == "NUM":
            re = sign * first.value
        elif first.kind == "IMAG":
            im = sign * first.value
        elif first.text == "i":
            im = sign
        else:
            raise ParseError(f"expected a number, found {first.text!r}",
                             first.span)
        if first.kind == "NUM" and self.peek().text in ("+", "-"):
            op = self.next()
            s2 = 1.0 if op.text == "+" else -1.0
            second = self.next()
            if second.kind == "IMAG":
                im = s2 * second.value
            elif second.text == "i":
                im = s2
            else:
                raise ParseError("imaginary part must end in 'i'", second.span)
        return complex(re, im)


def parse(text: str, filename: str = "<string>") -> Program:
    """Parse and type-check a program; raises ParseError with a span."""
    return _Parser(_lex(text, filename), Program()).parse_program()


def parse_expr(text: str, sigs: dict[str, GeneratorSig] | None = None,
               filename: str = "<expr>") -> Diagram:
    """Parse a single expression against the given generator signatures."""
    program = Program(sigs=dict(sigs or {}))
    parser = _Parser(_lex(text, filename), program)
    out = parser.expression()
    end = parser.next()
    if end.kind != "EOF":
        raise ParseError(f"trailing input {end.text!r}", end.span)
    return out


def run_checks(program: Program, tol: float = 1e-9
               ) -> list[tuple[CheckStmt, Verdict]]:
    m = program.model()
    return [(c, check_eq(c.lhs, c.rhs, m, c.mode, tol))
            for c in program.checks]


# -- pretty printing ---------------------------------------------------------


def type_text(t: WireType) -> str:
    return str(t)


def pretty(d: Diagram) -> str:
    """Render a diagram as parseable source text.

    Sequential and parallel chains are flattened, so the output is stable
    under a parse/pretty round trip.
    """
    if isinstance(d, Id):
        return f"id[{type_text(d.wire_type)}]"
    if isinstance(d, Cap):
        return f"cap[{d.wire}]"
    if isinstance(d, Cup):
        return f"cup[{d.wire}]"
    if isinstance(d, Swap):
        return f"swap[{type_text(d.left)}, {type_text(d.right)}]"
    if isinstance(d, Gen):
        wrap = {"plain": "{}", "dagger": "dagger({})",
                "transpose": "transpose({})", "conjugate": "conj({})"}
        return wrap[d.sig.variant].format(d.sig.name)
    if isinstance(d, Seq):
        parts = []
        stack = [d]
        while stack:
            node = stack.pop()
            if isinstance(node, Seq):
                stack.append(node.second)
                stack.append(node.first)
            else:
                parts.append(pretty(node))
        return "(" + " ; ".join(parts) + ")"
    if isinstance(d, Par):
        parts = []
        stack = [d]
        while stack:
            node = stack.pop()
            if isinstance(node, Par):
                stack.append(node.right)
                stack.append(node.left)
            else:
                parts.append(pretty(node))
        return "(" + " * ".join(parts) + ")"
    raise TypeError(f"not a diagram: {d!r}")

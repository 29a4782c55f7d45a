"""Lexer and recursive-descent parser for the textual model dialect.

One keyword per structural element, so requirement templates translate
mechanically:

    model      := "model" IDENT datadict module* mode+
    datadict   := "datadict" "{" (vardecl | constdecl)* "}"
    vardecl    := ("var"|"input") IDENT ":" TYPE ["init" LIT]
                  ["min" LIT "max" LIT] ";"
    constdecl  := "const" IDENT ":" TYPE "=" LIT ";"
    module     := "module" IDENT "{" "in" "{" idlist "}"
                  "out" "{" idlist "}" "task" block "}"
    mode       := "mode" IDENT ["init"] "{" "guard" expr ";" proc* trans* "}"
    proc       := "procedure" "period" INT block
    trans      := "transition" "priority" INT "to" IDENT "when" expr
                  ["do" block] ";"
    block      := "{" stmt* "}"
    stmt       := IDENT "=" expr ";" | "if" "(" expr ")" block
                  ["else" block] | "call" IDENT ";"

Identifiers are `[A-Za-z_][A-Za-z0-9_.]*` (dots legal, as in module_1.1);
keywords are reserved and case-sensitive. Comments run `//` to end of line.
The init clause of a vardecl is optional: a variable without one starts at
the type default and is what the use-before-init check looks for.

Property syntax extends expressions with temporal operators. Binding, from
loosest: `->`, `||`, `&&`, `U`, then the unary `! X F G`. The bare names
X, F, G, U are reserved inside properties only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from . import ltl
from .evaluator import coerce
from .model import (
    Assign,
    Binary,
    BoolLit,
    Call,
    ConstDecl,
    ConstRef,
    DataDict,
    Expr,
    FloatLit,
    If,
    IntLit,
    INT32_MAX,
    INT32_MIN,
    Mode,
    Model,
    ModuleDef,
    Procedure,
    SourceSpan,
    Transition,
    Unary,
    VarDecl,
    VarKind,
    VarRef,
    VarType,
)
from .typecheck import TypeChecker

KEYWORDS = frozenset("""
    model datadict var input const init min max module in out task mode guard
    procedure period transition priority to when do call if else true false
    bool int32 float32 float64 sqrt abs
""".split())

TYPE_NAMES = {
    "bool": VarType.BOOL,
    "int32": VarType.INT32,
    "float32": VarType.FLOAT32,
    "float64": VarType.FLOAT64,
}


@dataclass(frozen=True)
class ParseDiagnostic:
    span: SourceSpan
    severity: str  # "error" | "warning"
    message: str
    code: str

    def __str__(self) -> str:
        return f"{self.code} {self.span}: {self.message}"


class _ParseError(Exception):
    def __init__(self, diagnostic: ParseDiagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


@dataclass(frozen=True)
class Token:
    kind: str  # ident | int | float | punct | eof
    text: str
    line: int
    col: int
    end_line: int
    end_col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
    |(?P<float>\d+(?:\.\d*(?:[eE][+-]?\d+)?|[eE][+-]?\d+))
    |(?P<int>\d+)
    |(?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
    |(?P<punct>&&|\|\||==|!=|<=|>=|->|[-+*/%<>=!(){};:,])
    """,
    re.VERBOSE,
)


def tokenize(text: str, filename: str) -> Tuple[List[Token], List[ParseDiagnostic]]:
    tokens: List[Token] = []
    diagnostics: List[ParseDiagnostic] = []
    line, col = 1, 1
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(filename, line, col, line, col + 1)
            diagnostics.append(ParseDiagnostic(
                span, "error", f"unexpected character {text[pos]!r}", "P001"))
            pos += 1
            col += 1
            continue
        lexeme = m.group(0)
        end_line, end_col = line, col
        for ch in lexeme:
            if ch == "\n":
                end_line += 1
                end_col = 1
            else:
                end_col += 1
        if m.lastgroup != "ws":
            kind = m.lastgroup
            tokens.append(Token(kind, lexeme, line, col, end_line, end_col))
        line, col = end_line, end_col
        pos = m.end()
    tokens.append(Token("eof", "", line, col, line, col))
    return tokens, diagnostics


@dataclass
class ParseResult:
    model: Optional[Model]
    diagnostics: List[ParseDiagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.model is not None

    def errors(self) -> List[ParseDiagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]


@dataclass
class LtlResult:
    formula: Optional[object]
    diagnostics: List[ParseDiagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.formula is not None


class _Parser:
    def __init__(self, tokens: List[Token], filename: str,
                 constants: Optional[set] = None, ltl_mode: bool = False):
        self.tokens = tokens
        self.pos = 0
        self.filename = filename
        self.constants = constants if constants is not None else set()
        self.ltl_mode = ltl_mode  # reserves bare X/F/G/U as temporal operators
        self.diagnostics: List[ParseDiagnostic] = []

    # -- token plumbing -------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        idx = min(self.pos + ahead, len(self.tokens) - 1)
        return self.tokens[idx]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("ident", "punct")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def span_of(self, tok: Token, end: Optional[Token] = None) -> SourceSpan:
        end = end or tok
        return SourceSpan(self.filename, tok.line, tok.col,
                          end.end_line, end.end_col)

    def fail(self, message: str, code: str = "P001",
             tok: Optional[Token] = None) -> _ParseError:
        tok = tok or self.peek()
        return _ParseError(ParseDiagnostic(
            self.span_of(tok), "error", message, code))

    def expect(self, text: str, what: Optional[str] = None) -> Token:
        if not self.at(text):
            found = self.peek().text or "end of input"
            raise self.fail(f"expected '{text}'"
                            + (f" ({what})" if what else "")
                            + f", found '{found}'")
        return self.advance()

    def expect_ident(self, what: str) -> Token:
        tok = self.peek()
        if tok.kind != "ident" or tok.text in KEYWORDS:
            raise self.fail(f"expected {what}, found '{tok.text or 'end of input'}'")
        return self.advance()

    def report(self, err: _ParseError) -> None:
        self.diagnostics.append(err.diagnostic)

    def resync_statement(self) -> None:
        """Skip to just past the next ';' or stop before '}' / EOF."""
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                return
            if tok.text == ";" and depth == 0:
                self.advance()
                return
            if tok.text == "{":
                depth += 1
            elif tok.text == "}":
                if depth == 0:
                    return
                depth -= 1
            self.advance()

    # -- expressions ----------------------------------------------------

    def parse_expr(self) -> Expr:
        return self._parse_or()

    def _parse_or(self) -> Expr:
        left = self._parse_and()
        while self.at("||"):
            op = self.advance()
            right = self._parse_and()
            left = Binary("||", left, right, self.span_of(op))
        return left

    def _parse_and(self) -> Expr:
        left = self._parse_equality()
        while self.at("&&"):
            op = self.advance()
            right = self._parse_equality()
            left = Binary("&&", left, right, self.span_of(op))
        return left

    def _parse_equality(self) -> Expr:
        left = self._parse_relational()
        while self.peek().text in ("==", "!=") and self.peek().kind == "punct":
            op = self.advance()
            right = self._parse_relational()
            left = Binary(op.text, left, right, self.span_of(op))
        return left

    def _parse_relational(self) -> Expr:
        left = self._parse_additive()
        while self.peek().text in ("<", "<=", ">", ">=") and self.peek().kind == "punct":
            op = self.advance()
            right = self._parse_additive()
            left = Binary(op.text, left, right, self.span_of(op))
        return left

    def _parse_additive(self) -> Expr:
        left = self._parse_term()
        while self.peek().text in ("+", "-") and self.peek().kind == "punct":
            op = self.advance()
            right = self._parse_term()
            left = Binary(op.text, left, right, self.span_of(op))
        return left

    def _parse_term(self) -> Expr:
        left = self._parse_unary()
        while self.peek().text in ("*", "/", "%") and self.peek().kind == "punct":
            op = self.advance()
            right = self._parse_unary()
            left = Binary(op.text, left, right, self.span_of(op))
        return left

    def _parse_unary(self) -> Expr:
        tok = self.peek()
        if tok.text == "-" and tok.kind == "punct":
            self.advance()
            # fold negation into an adjacent numeric literal so INT32_MIN
            # is writable as -2147483648
            nxt = self.peek()
            if nxt.kind == "int":
                self.advance()
                value = -int(nxt.text)
                if value < INT32_MIN:
                    raise self.fail(
                        f"integer literal {value} below int32 range", "P006", nxt)
                return IntLit(value, self.span_of(tok, nxt))
            if nxt.kind == "float":
                self.advance()
                return FloatLit(-float(nxt.text), self.span_of(tok, nxt))
            return Unary("-", self._parse_unary(), self.span_of(tok))
        if tok.text == "!" and tok.kind == "punct":
            self.advance()
            return Unary("!", self._parse_unary(), self.span_of(tok))
        return self._parse_primary()

    def _parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            value = int(tok.text)
            if value > INT32_MAX:
                raise self.fail(f"integer literal {tok.text} exceeds int32 range",
                                "P006", tok)
            return IntLit(value, self.span_of(tok))
        if tok.kind == "float":
            self.advance()
            return FloatLit(float(tok.text), self.span_of(tok))
        if tok.text in ("true", "false"):
            self.advance()
            return BoolLit(tok.text == "true", self.span_of(tok))
        if tok.text in ("sqrt", "abs"):
            self.advance()
            self.expect("(")
            operand = self.parse_expr()
            end = self.expect(")")
            return Unary(tok.text, operand, self.span_of(tok, end))
        if tok.text == "(" and tok.kind == "punct":
            self.advance()
            expr = self.parse_expr()
            self.expect(")")
            return expr
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            if self.ltl_mode and tok.text in ("X", "F", "G", "U"):
                raise self.fail(
                    f"'{tok.text}' is a temporal operator inside properties")
            self.advance()
            span = self.span_of(tok)
            if tok.text in self.constants:
                return ConstRef(tok.text, span)
            return VarRef(tok.text, span)
        raise self.fail(f"expected expression, found '{tok.text or 'end of input'}'")

    # literal with optional sign, for declarations
    def parse_literal(self) -> Expr:
        tok = self.peek()
        negate = tok.text == "-" and tok.kind == "punct"
        if negate:
            self.advance()
        lit = self.peek()
        if lit.kind == "int":
            self.advance()
            return IntLit(-int(lit.text) if negate else int(lit.text),
                          self.span_of(tok, lit))
        if lit.kind == "float":
            self.advance()
            return FloatLit(-float(lit.text) if negate else float(lit.text),
                            self.span_of(tok, lit))
        if not negate and lit.text in ("true", "false"):
            self.advance()
            return BoolLit(lit.text == "true", self.span_of(lit))
        raise self.fail("expected literal", "P006", lit)

    # -- statements -----------------------------------------------------

    def parse_block(self) -> tuple:
        self.expect("{")
        stmts: List[object] = []
        while not self.at("}") and self.peek().kind != "eof":
            try:
                stmts.append(self.parse_stmt())
            except _ParseError as err:
                self.report(err)
                self.resync_statement()
        self.expect("}")
        return tuple(stmts)

    def parse_stmt(self):
        tok = self.peek()
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then = self.parse_block()
            orelse: tuple = ()
            if self.accept("else"):
                orelse = self.parse_block()
            return If(cond, then, orelse, self.span_of(tok))
        if self.at("call"):
            self.advance()
            name = self.expect_ident("module name")
            end = self.expect(";")
            return Call(name.text, self.span_of(tok, end))
        name = self.expect_ident("variable name")
        self.expect("=", "assignment")
        expr = self.parse_expr()
        end = self.expect(";")
        return Assign(name.text, expr, self.span_of(tok, end))

    # -- declarations ---------------------------------------------------

    def parse_datadict(self) -> DataDict:
        self.expect("datadict")
        self.expect("{")
        entries: List[VarDecl] = []
        constants: List[ConstDecl] = []
        while not self.at("}") and self.peek().kind != "eof":
            try:
                if self.at("const"):
                    constants.append(self._parse_constdecl())
                elif self.at("var") or self.at("input"):
                    entries.append(self._parse_vardecl())
                else:
                    raise self.fail("expected 'var', 'input', or 'const'")
            except _ParseError as err:
                self.report(err)
                self.resync_statement()
        self.expect("}")
        return DataDict(entries=tuple(entries), constants=tuple(constants))

    def _parse_type(self) -> VarType:
        tok = self.peek()
        if tok.text not in TYPE_NAMES:
            raise self.fail(f"unknown type name '{tok.text or 'end of input'}'",
                            "P002", tok)
        self.advance()
        return TYPE_NAMES[tok.text]

    def _decl_value(self, lit: Expr, vtype: VarType, what: str):
        span = lit.span
        if isinstance(lit, BoolLit):
            if vtype is not VarType.BOOL:
                raise _ParseError(ParseDiagnostic(
                    span, "error", f"{what}: boolean literal for {vtype} variable",
                    "P006"))
            return lit.value
        if vtype is VarType.BOOL:
            raise _ParseError(ParseDiagnostic(
                span, "error", f"{what}: {vtype} variable needs true/false",
                "P006"))
        if isinstance(lit, IntLit):
            if vtype is VarType.INT32 and not INT32_MIN <= lit.value <= INT32_MAX:
                raise _ParseError(ParseDiagnostic(
                    span, "error", f"{what}: {lit.value} outside int32 range",
                    "P006"))
            return coerce(lit.value, vtype)
        # float literal
        if vtype is VarType.INT32:
            raise _ParseError(ParseDiagnostic(
                span, "error", f"{what}: float literal for int32 variable",
                "P006"))
        return coerce(lit.value, vtype)

    def _parse_vardecl(self) -> VarDecl:
        kw = self.advance()  # var | input
        kind = VarKind.INPUT if kw.text == "input" else VarKind.INTERNAL
        name = self.expect_ident("variable name")
        self.expect(":")
        vtype = self._parse_type()
        init = vmin = vmax = None
        if self.accept("init"):
            init = self._decl_value(self.parse_literal(), vtype,
                                    f"init of '{name.text}'")
        if self.accept("min"):
            vmin = self._decl_value(self.parse_literal(), vtype,
                                    f"min of '{name.text}'")
            self.expect("max")
            vmax = self._decl_value(self.parse_literal(), vtype,
                                    f"max of '{name.text}'")
        end = self.expect(";")
        span = self.span_of(kw, end)
        if vmin is not None and vmax is not None and vmin > vmax:
            raise _ParseError(ParseDiagnostic(
                span, "error", f"'{name.text}': min {vmin} exceeds max {vmax}",
                "P006"))
        if init is not None and vmin is not None and not vmin <= init <= vmax:
            raise _ParseError(ParseDiagnostic(
                span, "error",
                f"'{name.text}': init {init} outside [{vmin}, {vmax}]", "P006"))
        return VarDecl(name.text, vtype, init, vmin, vmax, kind, span)

    def _parse_constdecl(self) -> ConstDecl:
        kw = self.expect("const")
        name = self.expect_ident("constant name")
        self.expect(":")
        vtype = self._parse_type()
        self.expect("=")
        value = self._decl_value(self.parse_literal(), vtype,
                                 f"value of '{name.text}'")
        end = self.expect(";")
        self.constants.add(name.text)
        return ConstDecl(name.text, vtype, value, self.span_of(kw, end))

    def _parse_idlist(self) -> tuple:
        self.expect("{")
        names: List[str] = []
        while not self.at("}") and self.peek().kind != "eof":
            names.append(self.expect_ident("variable name").text)
        self.expect("}")
        return tuple(names)

    def parse_module(self) -> ModuleDef:
        kw = self.expect("module")
        name = self.expect_ident("module name")
        self.expect("{")
        self.expect("in")
        v_in = self._parse_idlist()
        self.expect("out")
        v_out = self._parse_idlist()
        self.expect("task")
        task = self.parse_block()
        end = self.expect("}")
        return ModuleDef(name.text, v_in, v_out, task, self.span_of(kw, end))

    def parse_mode(self) -> Tuple[Mode, bool]:
        kw = self.expect("mode")
        name = self.expect_ident("mode name")
        is_initial = self.accept("init")
        self.expect("{")
        self.expect("guard")
        guard = self.parse_expr()
        self.expect(";")
        procedures: List[Procedure] = []
        transitions: List[Transition] = []
        while not self.at("}") and self.peek().kind != "eof":
            try:
                if self.at("procedure"):
                    procedures.append(self._parse_procedure())
                elif self.at("transition"):
                    transitions.append(self._parse_transition())
                else:
                    raise self.fail("expected 'procedure' or 'transition'")
            except _ParseError as err:
                self.report(err)
                self.resync_statement()
        end = self.expect("}")
        mode = Mode(name.text, guard, tuple(procedures), tuple(transitions),
                    self.span_of(kw, end))
        return mode, is_initial

    def _parse_procedure(self) -> Procedure:
        kw = self.expect("procedure")
        self.expect("period")
        period_tok = self.peek()
        if period_tok.kind != "int":
            raise self.fail("expected integer period", "P006", period_tok)
        self.advance()
        period = int(period_tok.text)
        if period < 1:
            raise _ParseError(ParseDiagnostic(
                self.span_of(period_tok), "error",
                f"period must be >= 1, got {period}", "P006"))
        body = self.parse_block()
        return Procedure(period, body, self.span_of(kw))

    def _parse_transition(self) -> Transition:
        kw = self.expect("transition")
        self.expect("priority")
        prio_tok = self.peek()
        if prio_tok.kind != "int":
            raise self.fail("expected integer priority", "P006", prio_tok)
        self.advance()
        priority = int(prio_tok.text)
        if priority < 1:
            raise _ParseError(ParseDiagnostic(
                self.span_of(prio_tok), "error",
                f"priority must be a positive integer, got {priority}", "P006"))
        self.expect("to")
        target = self.expect_ident("target mode name")
        self.expect("when")
        condition = self.parse_expr()
        action: tuple = ()
        if self.accept("do"):
            action = self.parse_block()
        end = self.expect(";")
        return Transition(priority, target.text, condition, action,
                          self.span_of(kw, end))

    # -- model ----------------------------------------------------------

    def parse_model(self) -> Optional[Model]:
        try:
            self.expect("model")
        except _ParseError as err:
            self.report(err)
            return None
        try:
            name = self.expect_ident("model name")
            datadict = self.parse_datadict()
        except _ParseError as err:
            self.report(err)
            return None

        modules: List[ModuleDef] = []
        modes: List[Mode] = []
        initial: List[Tuple[str, SourceSpan]] = []
        while self.peek().kind != "eof":
            try:
                if self.at("module"):
                    modules.append(self.parse_module())
                elif self.at("mode"):
                    mode, is_initial = self.parse_mode()
                    modes.append(mode)
                    if is_initial:
                        initial.append((mode.name, mode.span))
                else:
                    raise self.fail("expected 'module' or 'mode'")
            except _ParseError as err:
                self.report(err)
                self._resync_toplevel()

        eof_span = self.span_of(self.peek())
        if not modes:
            self.diagnostics.append(ParseDiagnostic(
                eof_span, "error", "model declares no modes", "P001"))
        if not initial and modes:
            self.diagnostics.append(ParseDiagnostic(
                eof_span, "error", "missing initial mode (mark one 'init')",
                "P004"))
        for dup_name, dup_span in initial[1:]:
            self.diagnostics.append(ParseDiagnostic(
                dup_span, "error",
                f"multiple initial modes ('{dup_name}' also marked init)",
                "P005"))

        model = Model(
            name=name.text,
            datadict=datadict,
            modules=tuple(modules),
            modes=tuple(modes),
            initial_mode=initial[0][0] if initial else "",
        )
        self._validate(model)
        if any(d.severity == "error" for d in self.diagnostics):
            return None
        return model

    def _resync_toplevel(self) -> None:
        while self.peek().kind != "eof":
            if self.peek().text in ("module", "mode"):
                return
            self.advance()

    def _validate(self, model: Model) -> None:
        def dup_check(names, what):
            seen = {}
            for item_name, span in names:
                if item_name in seen:
                    self.diagnostics.append(ParseDiagnostic(
                        span, "error", f"duplicate {what} '{item_name}'", "P003"))
                seen[item_name] = span

        dd = model.datadict
        dup_check([(v.name, v.span) for v in dd.entries]
                  + [(c.name, c.span) for c in dd.constants], "variable")
        dup_check([(m.name, m.span) for m in model.modes], "mode")
        dup_check([(m.name, m.span) for m in model.modules], "module")

        mode_names = {m.name for m in model.modes}
        module_names = {m.name for m in model.modules}
        for mode in model.modes:
            prios = {}
            for trans in mode.transitions:
                if trans.target not in mode_names:
                    self.diagnostics.append(ParseDiagnostic(
                        trans.span, "error",
                        f"transition targets undeclared mode '{trans.target}'",
                        "P007"))
                if trans.priority in prios:
                    self.diagnostics.append(ParseDiagnostic(
                        trans.span, "error",
                        f"duplicate transition priority {trans.priority} in "
                        f"mode '{mode.name}'", "P008"))
                prios[trans.priority] = trans

        def check_calls(stmts):
            from .model import walk_stmts
            for stmt in walk_stmts(stmts):
                if isinstance(stmt, Call) and stmt.module not in module_names:
                    self.diagnostics.append(ParseDiagnostic(
                        stmt.span, "error",
                        f"call to undeclared module '{stmt.module}'", "P007"))

        for mode in model.modes:
            for proc in mode.procedures:
                check_calls(proc.body)
            for trans in mode.transitions:
                check_calls(trans.action)
        for module in model.modules:
            check_calls(module.task)

    # -- LTL --------------------------------------------------------------

    def parse_ltl_formula(self):
        return self._parse_ltl_implies()

    def _parse_ltl_implies(self):
        left = self._parse_ltl_or()
        if self.at("->"):
            self.advance()
            right = self._parse_ltl_implies()  # right-associative
            return ltl.Implies(left, right)
        return left

    def _parse_ltl_or(self):
        left = self._parse_ltl_and()
        while self.at("||"):
            self.advance()
            left = ltl.Or(left, self._parse_ltl_and())
        return left

    def _parse_ltl_and(self):
        left = self._parse_ltl_until()
        while self.at("&&"):
            self.advance()
            left = ltl.And(left, self._parse_ltl_until())
        return left

    def _parse_ltl_until(self):
        left = self._parse_ltl_unary()
        if self.peek().kind == "ident" and self.peek().text == "U":
            self.advance()
            return ltl.Until(left, self._parse_ltl_until())  # right-associative
        return left

    _LTL_BOUNDARY = ("&&", "||", "->", ")", "U", "")

    def _parse_ltl_unary(self):
        tok = self.peek()
        if tok.kind == "ident" and tok.text in ("X", "F", "G"):
            self.advance()
            sub = self._parse_ltl_unary()
            return {"X": ltl.Next, "F": ltl.Eventually, "G": ltl.Always}[tok.text](sub)
        if tok.text == "!" and tok.kind == "punct":
            self.advance()
            return ltl.Not(self._parse_ltl_unary())
        if tok.text == "(" and tok.kind == "punct":
            # a parenthesis may open an arithmetic expression or group a
            # temporal subformula; try the expression reading first, and
            # keep it only if it ends at a formula boundary
            saved = self.pos
            try:
                expr = self.parse_expr()
                if self.peek().text in self._LTL_BOUNDARY:
                    return self._ltl_atom(expr)
            except _ParseError:
                pass
            self.pos = saved
            self.advance()
            formula = self._parse_ltl_implies()
            self.expect(")")
            return formula
        # a bare atom: a comparison, never reaching && or || (those belong
        # to the formula level)
        return self._ltl_atom(self._parse_equality())

    def _ltl_atom(self, expr: Expr):
        """Lower an expression into LTL, splitting its boolean spine."""
        if isinstance(expr, Binary) and expr.op == "&&":
            return ltl.And(self._ltl_atom(expr.left), self._ltl_atom(expr.right))
        if isinstance(expr, Binary) and expr.op == "||":
            return ltl.Or(self._ltl_atom(expr.left), self._ltl_atom(expr.right))
        if isinstance(expr, Unary) and expr.op == "!":
            return ltl.Not(self._ltl_atom(expr.operand))
        return ltl.Atom(expr)


# --------------------------------------------------------------------------
# Entry points

def parse_model(text: str, filename: str = "<input>") -> ParseResult:
    """Parse model text; returns the model or error diagnostics, never raises."""
    tokens, lex_diags = tokenize(text, filename)
    parser = _Parser(tokens, filename)
    parser.diagnostics.extend(lex_diags)
    model = parser.parse_model()
    if any(d.severity == "error" for d in parser.diagnostics):
        model = None
    return ParseResult(model, parser.diagnostics)


def parse_expression(text: str, datadict: DataDict,
                     filename: str = "<expr>") -> Tuple[Optional[Expr], List[ParseDiagnostic]]:
    """Parse a standalone expression against a data dictionary."""
    tokens, diags = tokenize(text, filename)
    if diags:
        return None, diags
    parser = _Parser(tokens, filename,
                     constants={c.name for c in datadict.constants})
    try:
        expr = parser.parse_expr()
        if parser.peek().kind != "eof":
            raise parser.fail(f"unexpected '{parser.peek().text}' after expression")
    except _ParseError as err:
        parser.report(err)
        return None, parser.diagnostics
    return expr, parser.diagnostics


def parse_ltl(text: str, datadict: DataDict,
              filename: str = "<property>") -> LtlResult:
    """Parse a temporal property; atoms are type-checked against the dictionary."""
    tokens, lex_diags = tokenize(text, filename)
    parser = _Parser(tokens, filename,
                     constants={c.name for c in datadict.constants},
                     ltl_mode=True)
    parser.diagnostics.extend(lex_diags)
    formula = None
    if not lex_diags:
        try:
            formula = parser.parse_ltl_formula()
            if parser.peek().kind != "eof":
                raise parser.fail(
                    f"unexpected '{parser.peek().text}' after formula")
        except _ParseError as err:
            parser.report(err)
            formula = None

    if formula is not None:
        checker = TypeChecker(datadict)
        for atom in ltl.ltl_atoms(formula):
            for ref in _atom_refs(atom.expr):
                if datadict.var(ref.name) is None and datadict.const(ref.name) is None:
                    parser.diagnostics.append(ParseDiagnostic(
                        ref.span or SourceSpan(filename, 1, 1, 1, 1), "error",
                        f"property references unknown variable '{ref.name}'",
                        "P009"))
            t = checker.type_of(atom.expr)
            if t is not None and t is not VarType.BOOL:
                parser.diagnostics.append(ParseDiagnostic(
                    atom.expr.span or SourceSpan(filename, 1, 1, 1, 1), "error",
                    f"property atom is {t}, not boolean", "P010"))
        parser.diagnostics.extend(
            ParseDiagnostic(d.span or SourceSpan(filename, 1, 1, 1, 1),
                            "error", d.message, "P010")
            for d in checker.diagnostics)

    if any(d.severity == "error" for d in parser.diagnostics):
        formula = None
    return LtlResult(formula, parser.diagnostics)


def _atom_refs(expr: Expr):
    from .model import walk_expr
    for node in walk_expr(expr):
        if isinstance(node, (VarRef, ConstRef)):
            yield node


def parse_property_file(text: str, datadict: DataDict,
                        filename: str = "<properties>") -> Tuple[List[Tuple[int, object, str]], List[ParseDiagnostic]]:
    """Parse a property file: one formula per line, '#' starts a comment.

    Returns ((line number, formula, source text) triples, diagnostics).
    """
    formulas = []
    diagnostics: List[ParseDiagnostic] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        result = parse_ltl(line, datadict, filename=f"{filename}:{lineno}")
        diagnostics.extend(result.diagnostics)
        if result.formula is not None:
            formulas.append((lineno, result.formula, line))
    return formulas, diagnostics

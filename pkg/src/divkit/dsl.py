"""Expression DSL: job files with a chart declaration, named definitions,
and one command.

    chart x, y, z, w;
    pi = x*Dx^^Dy + Dz^^Dw + Dx^^Dw;
    divisor pi;

Basis tokens: Dx, Dy, ... (one per chart variable) for vector fields,
dx, dy, ... for plain forms, e1, e2, ... for coframe generators (bound to a
frame by the command that uses them).  Operators: + - * ^ (scalar power)
and ^^ (wedge).  Rational literals are written 3/2.  Errors carry line and
column.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .rings import Chart, Poly
from .multivector import DiffForm, Multivector
from .frames import AnchorFrame, CoframeForm, catalog
from .divisors import DivisorIdeal, make_ideal


class ParseError(ValueError):
    def __init__(self, line, col, message):
        self.line = line
        self.col = col
        super().__init__("%d:%d: %s" % (line, col, message))


COMMANDS = (
    "check_poisson",
    "divisor",
    "classify",
    "lift",
    "modular",
    "residue",
    "modify",
    "verify_frame",
    "spinor",
)

KEYWORDS = COMMANDS + (
    "chart",
    "frame",
    "ideal",
    "custom",
    "to",
    "via",
    "on",
    "by",
    "keep",
    "kernel",
    "lower",
    "upper",
    "output",
)

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>\#[^\n]*)
      | (?P<num>\d+)
      | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<str>"[^"\n]*")
      | (?P<wedge>\^\^)
      | (?P<sym>[-+*^(),;=/])
    """,
    re.VERBOSE,
)


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return "%s(%r)@%d:%d" % (self.kind, self.text, self.line, self.col)


def tokenize(source):
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(line, col, "unexpected character %r" % source[pos])
        text = m.group(0)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class CoframeExpr:
    """Coframe expression over e1..en, not yet bound to a frame."""

    __slots__ = ("chart", "degree", "comps")

    def __init__(self, chart, degree, comps):
        self.chart = chart
        self.degree = degree
        clean = {}
        for idx, c in comps.items():
            if not c.is_zero():
                clean[tuple(idx)] = c
        self.comps = clean

    def is_zero(self):
        return not self.comps

    def __add__(self, other):
        if not isinstance(other, CoframeExpr) or other.chart != self.chart:
            return NotImplemented
        if self.degree != other.degree:
            if self.is_zero():
                return other
            if other.is_zero():
                return self
            raise ValueError("cannot add coframe degrees %d and %d" % (self.degree, other.degree))
        res = dict(self.comps)
        for idx, c in other.comps.items():
            s = res.get(idx)
            res[idx] = c if s is None else s + c
        return CoframeExpr(self.chart, self.degree, res)

    def __neg__(self):
        return CoframeExpr(self.chart, self.degree, {i: -c for i, c in self.comps.items()})

    def __sub__(self, other):
        if not isinstance(other, CoframeExpr):
            return NotImplemented
        return self + (-other)

    def bind(self, frame):
        if frame.chart != self.chart:
            raise ValueError("form and frame charts differ")
        return CoframeForm(frame, self.degree, self.comps)

    def __str__(self):
        from .multivector import _graded_str

        return _graded_str(self, "e", lambda i: str(i + 1))


class Job:
    __slots__ = ("chart", "definitions", "order", "command", "output")

    def __init__(self):
        self.chart = None
        self.definitions = {}
        self.order = []
        self.command = None
        self.output = None


_VAR_RE = re.compile(r"[a-z][a-z0-9_]*$")


class Parser:
    def __init__(self, source):
        self.tokens = tokenize(source)
        self.pos = 0
        self.job = Job()

    # -- token helpers ------------------------------------------------------

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(tok.line, tok.col, message)

    def expect(self, text):
        t = self.next()
        if t.text != text:
            self.fail("expected %r, found %r" % (text, t.text or "end of input"), t)
        return t

    def expect_ident(self, what="a name"):
        t = self.next()
        if t.kind != "ident":
            self.fail("expected %s, found %r" % (what, t.text or "end of input"), t)
        return t

    # -- grammar ------------------------------------------------------------

    def parse(self):
        while self.peek().kind != "eof":
            self.statement()
        if self.job.chart is None:
            self.fail("job has no chart declaration")
        if self.job.command is None:
            self.fail("job has no command")
        return self.job

    def statement(self):
        t = self.peek()
        if t.text == "chart":
            self.chart_decl()
        elif t.text == "output":
            self.next()
            s = self.next()
            if s.kind != "str":
                self.fail("expected a quoted output name", s)
            self.job.output = s.text[1:-1]
            self.expect(";")
        elif t.text in COMMANDS:
            if self.job.command is not None:
                self.fail("a job holds exactly one command", t)
            self.job.command = self.command()
            self.expect(";")
        elif t.kind == "ident":
            self.assignment()
        else:
            self.fail("expected a statement, found %r" % t.text, t)

    def chart_decl(self):
        tok = self.expect("chart")
        if self.job.chart is not None:
            self.fail("chart is already declared", tok)
        names = [self.expect_ident("a variable name")]
        while self.peek().text == ",":
            self.next()
            names.append(self.expect_ident("a variable name"))
        self.expect(";")
        seen = []
        for t in names:
            v = t.text
            if not _VAR_RE.match(v):
                self.fail("variable names are lowercase identifiers: %r" % v, t)
            if v in KEYWORDS:
                self.fail("%r is reserved" % v, t)
            if re.match(r"e\d+$", v):
                self.fail("names e1, e2, ... are reserved for coframes", t)
            seen.append(v)
        for t, v in zip(names, seen):
            for other in seen:
                if v != other and v == "d" + other:
                    self.fail(
                        "variable %r collides with the form token d%s" % (v, other), t
                    )
        if len(set(seen)) != len(seen):
            self.fail("chart variables must be distinct", tok)
        self.job.chart = Chart(seen)

    def assignment(self):
        name_tok = self.expect_ident()
        name = name_tok.text
        if name in KEYWORDS:
            self.fail("%r is reserved" % name, name_tok)
        if self.job.chart is not None and name in self.job.chart:
            self.fail("%r is a chart variable" % name, name_tok)
        self.expect("=")
        t = self.peek()
        if t.text == "frame":
            self.next()
            value = self.frame_spec()
        elif t.text == "ideal":
            self.next()
            self.expect("(")
            gen = self.expr_value(Poly, "a polynomial")
            self.expect(")")
            value = make_ideal(gen)
        else:
            value = self.expression()
        self.expect(";")
        if name in self.job.definitions:
            self.fail("%r is already defined" % name, name_tok)
        self.job.definitions[name] = value
        self.job.order.append(name)

    def frame_spec(self):
        kind_tok = self.expect_ident("a frame kind")
        kind = kind_tok.text
        chart = self.need_chart(kind_tok)
        self.expect("(")
        if kind == "custom":
            gens = [self.expr_value(Multivector, "a vector field")]
            while self.peek().text == ";":
                self.next()
                gens.append(self.expr_value(Multivector, "a vector field"))
            self.expect(")")
            for g in gens:
                if g.degree != 1:
                    self.fail("custom frame generators must be vector fields", kind_tok)
            try:
                return AnchorFrame(chart, gens)
            except Exception as e:
                self.fail("bad custom frame: %s" % e, kind_tok)
        args = []
        if self.peek().text != ")":
            while True:
                t = self.next()
                if t.kind == "ident":
                    args.append(t.text)
                elif t.kind == "num":
                    args.append(int(t.text))
                else:
                    self.fail("expected a variable or integer argument", t)
                if self.peek().text != ",":
                    break
                self.next()
        self.expect(")")
        try:
            return catalog(kind, chart, *args)
        except Exception as e:
            self.fail("bad frame %s(...): %s" % (kind, e), kind_tok)

    def need_chart(self, tok):
        if self.job.chart is None:
            self.fail("declare the chart first", tok)
        return self.job.chart

    def command(self):
        t = self.next()
        name = t.text
        if name == "check_poisson":
            return ("check_poisson", self.expr_value(Multivector, "a bivector"))
        if name == "divisor":
            return ("divisor", self.expr_value(Multivector, "a bivector"))
        if name == "classify":
            v = self.operand()
            return ("classify", v)
        if name == "lift":
            pi = self.expr_value(Multivector, "a bivector")
            self.expect("to")
            fr = self.frame_operand()
            return ("lift", pi, fr)
        if name == "modular":
            return ("modular", self.expr_value(Multivector, "a bivector"))
        if name == "residue":
            w = self.expr_value(CoframeExpr, "a coframe form")
            self.expect("via")
            flavor = self.expect_ident("a residue flavor").text
            self.expect("on")
            fr = self.frame_operand()
            return ("residue", w, flavor, fr)
        if name == "modify":
            side_tok = self.next()
            if side_tok.text not in ("lower", "upper"):
                self.fail("expected 'lower' or 'upper'", side_tok)
            fr = self.frame_operand()
            key = self.next()
            want = "keep" if side_tok.text == "lower" else "kernel"
            if key.text != want:
                self.fail("expected %r" % want, key)
            idx = self.index_list()
            self.expect("by")
            ideal = self.ideal_operand()
            return ("modify", side_tok.text, fr, idx, ideal)
        if name == "verify_frame":
            fr = self.frame_operand()
            self.expect("by")
            ideal = self.ideal_operand()
            return ("verify_frame", fr, ideal)
        if name == "spinor":
            w = self.expr_value(CoframeExpr, "a coframe form")
            self.expect("on")
            fr = self.frame_operand()
            self.expect("via")
            flavor = self.expect_ident("'log' or 'elliptic'").text
            return ("spinor", w, flavor, fr)
        self.fail("unknown command %r" % name, t)

    def index_list(self):
        idx = []
        t = self.peek()
        if t.kind != "num":
            return idx  # empty subset is allowed
        while True:
            t = self.next()
            if t.kind != "num":
                self.fail("expected a 1-based generator index", t)
            idx.append(int(t.text) - 1)
            if self.peek().text != ",":
                break
            self.next()
        return idx

    def operand(self):
        """A named value or inline expression."""
        t = self.peek()
        if t.kind == "ident" and t.text in self.job.definitions:
            self.next()
            return self.job.definitions[t.text]
        return self.expression()

    def frame_operand(self):
        t = self.peek()
        if t.kind == "ident" and t.text in self.job.definitions:
            v = self.job.definitions[t.text]
            if isinstance(v, AnchorFrame):
                self.next()
                return v
        if t.text == "frame":
            self.next()
            return self.frame_spec()
        self.fail("expected a frame name or 'frame <kind>(...)'", t)

    def ideal_operand(self):
        if self.peek().text == "ideal":
            self.next()
            self.expect("(")
            gen = self.expr_value(Poly, "a polynomial")
            self.expect(")")
            try:
                return make_ideal(gen)
            except Exception as e:
                self.fail("bad ideal generator: %s" % e)
        v = self.operand()
        if isinstance(v, DivisorIdeal):
            return v
        if isinstance(v, Poly):
            try:
                return make_ideal(v)
            except Exception as e:
                self.fail("bad ideal generator: %s" % e)
        self.fail("expected an ideal or a polynomial")

    def expr_value(self, cls, what):
        tok = self.peek()
        v = self.operand()
        if cls is Poly and isinstance(v, (int, Fraction)):
            v = Poly.const(self.need_chart(tok), v)
        if not isinstance(v, cls):
            self.fail("expected %s" % what, tok)
        return v

    # -- expressions ---------------------------------------------------------

    def expression(self):
        v = self.term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            w = self.term()
            v = self.combine_add(v, w, op)
        return v

    def term(self):
        v = self.factor()
        while True:
            t = self.peek()
            if t.text == "*":
                self.next()
                v = self.combine_mul(v, self.factor(), t)
            elif t.kind == "wedge":
                self.next()
                v = self.combine_wedge(v, self.factor(), t)
            else:
                return v

    def factor(self):
        t = self.peek()
        if t.text == "-":
            self.next()
            return self.negate(self.factor())
        v = self.atom()
        while self.peek().text == "^":
            op = self.next()
            e = self.next()
            if e.kind != "num":
                self.fail("expected an integer exponent", e)
            v = self.power(v, int(e.text), op)
        return v

    def atom(self):
        t = self.next()
        if t.text == "(":
            v = self.expression()
            self.expect(")")
            return v
        if t.kind == "num":
            num = int(t.text)
            if self.peek().text == "/":
                self.next()
                d = self.next()
                if d.kind != "num" or int(d.text) == 0:
                    self.fail("expected a nonzero integer denominator", d)
                return Fraction(num, int(d.text))
            return Fraction(num)
        if t.kind == "ident":
            return self.resolve(t)
        self.fail("expected a value, found %r" % (t.text or "end of input"), t)

    def resolve(self, tok):
        name = tok.text
        if name in self.job.definitions:
            return self.job.definitions[name]
        chart = self.need_chart(tok)
        if name in chart:
            return Poly.var(chart, name)
        if name.startswith("D") and name[1:] in chart:
            return Multivector.basis_vector(chart, chart.index(name[1:]))
        if name.startswith("d") and name[1:] in chart:
            return DiffForm.basis_form(chart, chart.index(name[1:]))
        m = re.match(r"e(\d+)$", name)
        if m:
            i = int(m.group(1))
            if not 1 <= i <= chart.dimension:
                self.fail("coframe index e%d out of range" % i, tok)
            return CoframeExpr(
                chart, 1, {(i - 1,): Poly.const(chart, 1)}
            )
        self.fail("unknown name %r" % name, tok)

    # -- arithmetic dispatch --------------------------------------------------

    def to_poly(self, v):
        if isinstance(v, (int, Fraction)):
            return Poly.const(self.job.chart, v)
        return v

    def combine_add(self, a, b, op):
        a, b = self.to_poly(a), self.to_poly(b)
        try:
            return a + b if op == "+" else a - b
        except Exception as e:
            self.fail("cannot %s these values: %s" % ("add" if op == "+" else "subtract", e))

    def combine_mul(self, a, b, tok):
        if isinstance(a, (Multivector, DiffForm, CoframeExpr)) and isinstance(
            b, (int, Fraction, Poly)
        ):
            a, b = b, a
        a = self.to_poly(a)
        if isinstance(b, CoframeExpr):
            return CoframeExpr(
                b.chart, b.degree, {i: a * c for i, c in b.comps.items()}
            )
        try:
            return a * b
        except Exception as e:
            self.fail("cannot multiply these values: %s" % e, tok)

    def combine_wedge(self, a, b, tok):
        if isinstance(a, (int, Fraction, Poly)) or isinstance(b, (int, Fraction, Poly)):
            self.fail("wedge needs two graded factors", tok)
        if isinstance(a, CoframeExpr) and isinstance(b, CoframeExpr):
            out = {}
            from .multivector import merge_indices

            for ia, ca in a.comps.items():
                for ib, cb in b.comps.items():
                    m = merge_indices(ia, ib)
                    if m is None:
                        continue
                    sign, idx = m
                    v = ca * cb
                    if sign < 0:
                        v = -v
                    old = out.get(idx)
                    v = v if old is None else old + v
                    out[idx] = v
            return CoframeExpr(a.chart, a.degree + b.degree, out)
        if type(a) is not type(b):
            self.fail("cannot wedge %s with %s" % (type(a).__name__, type(b).__name__), tok)
        try:
            return a.wedge(b)
        except Exception as e:
            self.fail("cannot wedge these values: %s" % e, tok)

    def negate(self, v):
        if isinstance(v, (int, Fraction)):
            return -v
        return -v

    def power(self, v, e, tok):
        if isinstance(v, (int, Fraction)):
            return v**e
        if isinstance(v, Poly):
            return v**e
        self.fail("^ applies to scalars; use ^^ for the wedge", tok)


def parse(source):
    return Parser(source).parse()


def parse_expression(source, chart, definitions=None):
    """Parse a single expression in a given chart context (used for
    round-tripping printed payload values)."""
    p = Parser("")
    p.tokens = tokenize(source)
    p.pos = 0
    p.job.chart = chart
    p.job.definitions = dict(definitions or {})
    v = p.expression()
    t = p.peek()
    if t.kind != "eof":
        p.fail("trailing input after expression", t)
    return v


# ---------------------------------------------------------------------------
# Canonical printing (the formatter used by `dk fmt`)
# ---------------------------------------------------------------------------


def frame_to_source(frame):
    if frame.label is not None and frame.label[0] != "product":
        kind = frame.label[0]
        args = ", ".join(str(a) for a in frame.label[1:])
        return "frame %s(%s)" % (kind, args)
    gens = "; ".join(str(g) for g in frame.generators)
    return "frame custom(%s)" % gens


def value_to_source(v):
    if isinstance(v, AnchorFrame):
        return frame_to_source(v)
    if isinstance(v, DivisorIdeal):
        return "ideal(%s)" % v.generator
    return str(v)


def command_to_source(cmd):
    kind = cmd[0]
    if kind in ("check_poisson", "divisor", "modular"):
        return "%s %s" % (kind, cmd[1])
    if kind == "classify":
        v = cmd[1]
        return "classify %s" % (v.generator if isinstance(v, DivisorIdeal) else v)
    if kind == "lift":
        return "lift %s to %s" % (cmd[1], frame_to_source(cmd[2]))
    if kind == "residue":
        return "residue %s via %s on %s" % (cmd[1], cmd[2], frame_to_source(cmd[3]))
    if kind == "modify":
        _, side, fr, idx, ideal = cmd
        key = "keep" if side == "lower" else "kernel"
        idxs = ", ".join(str(i + 1) for i in idx)
        return "modify %s %s %s %s by %s" % (
            side,
            frame_to_source(fr),
            key,
            idxs,
            ideal.generator,
        )
    if kind == "verify_frame":
        return "verify_frame %s by %s" % (frame_to_source(cmd[1]), cmd[2].generator)
    if kind == "spinor":
        return "spinor %s on %s via %s" % (cmd[1], frame_to_source(cmd[3]), cmd[2])
    raise ValueError("unknown command %r" % (kind,))


def format_job(job):
    """Canonical source text for a parsed job (stable under re-formatting)."""
    lines = ["chart %s;" % ", ".join(job.chart.variables)]
    for name in job.order:
        lines.append("%s = %s;" % (name, value_to_source(job.definitions[name])))
    if job.output:
        lines.append('output "%s";' % job.output)
    cmd = job.command
    # commands referencing defined names print the names back when possible
    lines.append(command_to_source_named(job, cmd) + ";")
    return "\n".join(lines) + "\n"


def command_to_source_named(job, cmd):
    """Like command_to_source but substitutes definition names for values."""
    names = {}
    for name in job.order:
        key = id(job.definitions[name])
        names[key] = name

    def ref(v):
        return names.get(id(v)) or (
            frame_to_source(v)
            if isinstance(v, AnchorFrame)
            else v.generator if isinstance(v, DivisorIdeal) else str(v)
        )

    kind = cmd[0]
    if kind in ("check_poisson", "divisor", "modular"):
        return "%s %s" % (kind, ref(cmd[1]))
    if kind == "classify":
        return "classify %s" % ref(cmd[1])
    if kind == "lift":
        return "lift %s to %s" % (ref(cmd[1]), ref(cmd[2]))
    if kind == "residue":
        return "residue %s via %s on %s" % (ref(cmd[1]), cmd[2], ref(cmd[3]))
    if kind == "modify":
        _, side, fr, idx, ideal = cmd
        key = "keep" if side == "lower" else "kernel"
        idxs = ", ".join(str(i + 1) for i in idx)
        return "modify %s %s %s %s by %s" % (side, ref(fr), key, idxs, ref(ideal))
    if kind == "verify_frame":
        return "verify_frame %s by %s" % (ref(cmd[1]), ref(cmd[2]))
    if kind == "spinor":
        return "spinor %s on %s via %s" % (ref(cmd[1]), ref(cmd[3]), cmd[2])
    raise ValueError("unknown command %r" % (kind,))

"""Exact multivariate polynomial and localized-fraction arithmetic.

Coefficients are `fractions.Fraction` throughout, so every equality test in
the engine is a decision, never an approximation.  Polynomials live on a
fixed `Chart` (an ordered tuple of variable names); terms are stored as a
map from exponent tuples to nonzero rational coefficients, with graded
lexicographic order (leftmost variable strongest) fixing the canonical term
order used for printing and for leading-term extraction.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd as int_gcd


class UnknownVariable(KeyError):
    pass


class ZeroPolynomial(ValueError):
    pass


class ChartMismatch(ValueError):
    pass


class DegreeCapExceeded(RuntimeError):
    pass


# Optional global degree cap (set from the DK_MAX_DEGREE env var by the CLI).
_DEGREE_CAP = None


def set_degree_cap(cap):
    global _DEGREE_CAP
    _DEGREE_CAP = cap


def get_degree_cap():
    return _DEGREE_CAP


class Chart:
    """An ordered list of distinct variable names."""

    __slots__ = ("variables", "_index")

    def __init__(self, variables):
        variables = tuple(variables)
        if not variables:
            raise ValueError("chart needs at least one variable")
        if len(set(variables)) != len(variables):
            raise ValueError("chart variables must be distinct: %r" % (variables,))
        self.variables = variables
        self._index = {v: i for i, v in enumerate(variables)}

    @property
    def dimension(self):
        return len(self.variables)

    def index(self, var):
        try:
            return self._index[var]
        except KeyError:
            raise UnknownVariable(var) from None

    def __contains__(self, var):
        return var in self._index

    def __eq__(self, other):
        return isinstance(other, Chart) and self.variables == other.variables

    def __hash__(self):
        return hash(self.variables)

    def __repr__(self):
        return "Chart(%s)" % ", ".join(self.variables)

    def subchart(self, removed):
        kept = [v for v in self.variables if v not in removed]
        return Chart(kept)


def _as_fraction(c):
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError("expected an exact rational, got %r" % (c,))


class Poly:
    """Exact multivariate polynomial over a chart."""

    __slots__ = ("chart", "terms")

    def __init__(self, chart, terms=None, _clean=False):
        self.chart = chart
        if terms is None:
            self.terms = {}
        elif _clean:
            self.terms = terms
        else:
            clean = {}
            n = chart.dimension
            for exps, c in terms.items():
                if len(exps) != n:
                    raise ValueError("exponent tuple %r has wrong length" % (exps,))
                c = _as_fraction(c)
                if c != 0:
                    clean[tuple(exps)] = c
            self.terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, chart):
        return cls(chart, {}, _clean=True)

    @classmethod
    def const(cls, chart, c):
        c = _as_fraction(c)
        if c == 0:
            return cls.zero(chart)
        return cls(chart, {(0,) * chart.dimension: c}, _clean=True)

    @classmethod
    def var(cls, chart, name):
        i = chart.index(name)
        e = [0] * chart.dimension
        e[i] = 1
        return cls(chart, {tuple(e): Fraction(1)}, _clean=True)

    # -- basic queries -----------------------------------------------------

    def is_zero(self):
        return not self.terms

    def is_constant(self):
        return all(sum(e) == 0 for e in self.terms)

    def constant_value(self):
        if self.is_zero():
            return Fraction(0)
        if not self.is_constant():
            raise ValueError("not a constant polynomial: %s" % self)
        return next(iter(self.terms.values()))

    def total_degree(self):
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def degree_in(self, var):
        i = self.chart.index(var)
        if not self.terms:
            return -1
        return max(e[i] for e in self.terms)

    def variables_used(self):
        used = set()
        for e in self.terms:
            for i, k in enumerate(e):
                if k:
                    used.add(self.chart.variables[i])
        return used

    def leading(self):
        """(exponent, coefficient) of the graded-lex leading term."""
        if not self.terms:
            raise ZeroPolynomial("zero polynomial has no leading term")
        e = max(self.terms, key=lambda t: (sum(t), t))
        return e, self.terms[e]

    # -- arithmetic --------------------------------------------------------

    def _check(self, other):
        if self.chart != other.chart:
            raise ChartMismatch("%r vs %r" % (self.chart, other.chart))

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.chart, other)
        self._check(other)
        res = dict(self.terms)
        for e, c in other.terms.items():
            s = res.get(e, Fraction(0)) + c
            if s == 0:
                res.pop(e, None)
            else:
                res[e] = s
        return Poly(self.chart, res, _clean=True)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.chart, {e: -c for e, c in self.terms.items()}, _clean=True)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.chart, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _as_fraction(other)
            if c == 0:
                return Poly.zero(self.chart)
            return Poly(self.chart, {e: k * c for e, k in self.terms.items()}, _clean=True)
        if not isinstance(other, Poly):
            return NotImplemented
        self._check(other)
        res = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = res.get(e, Fraction(0)) + c1 * c2
                if s == 0:
                    res.pop(e, None)
                else:
                    res[e] = s
        p = Poly(self.chart, res, _clean=True)
        cap = _DEGREE_CAP
        if cap is not None and p.total_degree() > cap:
            raise DegreeCapExceeded(
                "intermediate degree %d exceeds DK_MAX_DEGREE=%d" % (p.total_degree(), cap)
            )
        return p

    __rmul__ = __mul__

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        out = Poly.const(self.chart, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.chart, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.chart == other.chart and self.terms == other.terms

    __hash__ = None

    def __bool__(self):
        return bool(self.terms)

    # -- calculus ----------------------------------------------------------

    def diff(self, var):
        """Exact formal partial derivative with respect to a chart variable."""
        i = self.chart.index(var)
        res = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            ne = list(e)
            ne[i] -= 1
            res[tuple(ne)] = c * e[i]
        return Poly(self.chart, res, _clean=True)

    def evaluate(self, point):
        """Evaluate at a rational point given as a dict or a full tuple."""
        if not isinstance(point, dict):
            point = dict(zip(self.chart.variables, point))
        total = Fraction(0)
        for e, c in self.terms.items():
            v = c
            for i, k in enumerate(e):
                if k:
                    v *= _as_fraction(point[self.chart.variables[i]]) ** k
            total += v
        return total

    def substitute_zero(self, names):
        """Set the given variables to 0 (result stays on the same chart)."""
        idx = [self.chart.index(v) for v in names]
        res = {}
        for e, c in self.terms.items():
            if any(e[i] for i in idx):
                continue
            res[e] = c
        return Poly(self.chart, res, _clean=True)

    def restrict(self, subchart):
        """Move to a subchart; variables not in it must not occur."""
        pos = []
        for v in subchart.variables:
            pos.append(self.chart.index(v))
        keep = set(pos)
        res = {}
        for e, c in self.terms.items():
            if any(k and i not in keep for i, k in enumerate(e)):
                raise ValueError("polynomial %s uses variables outside %r" % (self, subchart))
            res[tuple(e[i] for i in pos)] = c
        return Poly(subchart, res, _clean=True)

    def extend(self, superchart):
        """Re-express on a larger chart containing all current variables."""
        pos = [superchart.index(v) for v in self.chart.variables]
        n = superchart.dimension
        res = {}
        for e, c in self.terms.items():
            ne = [0] * n
            for i, k in enumerate(e):
                ne[pos[i]] = k
            res[tuple(ne)] = c
        return Poly(superchart, res, _clean=True)

    # -- normalization -----------------------------------------------------

    def content(self):
        """Positive rational c with self/c integral, primitive; sign from the
        leading coefficient is NOT included (see `unit_normalized`)."""
        if not self.terms:
            return Fraction(0)
        num = 0
        den = 1
        for c in self.terms.values():
            num = int_gcd(num, abs(c.numerator))
            den = den * c.denominator // int_gcd(den, c.denominator)
        return Fraction(num, den)

    def unit_normalized(self):
        """Divide by content and flip sign so the leading coefficient is positive."""
        if not self.terms:
            raise ZeroPolynomial("cannot normalize the zero polynomial")
        c = self.content()
        _, lc = self.leading()
        if lc < 0:
            c = -c
        return self * (1 / c)

    # -- printing ----------------------------------------------------------

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: (sum(t[0]), t[0]), reverse=True)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            factors = []
            for i, k in enumerate(e):
                if k == 1:
                    factors.append(self.chart.variables[i])
                elif k > 1:
                    factors.append("%s^%d" % (self.chart.variables[i], k))
            mag = abs(c)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = str(mag) + "*" + "*".join(factors)
            parts.append(("- " if c < 0 else "+ ") + body)
        out = " ".join(parts)
        if out.startswith("+ "):
            out = out[2:]
        elif out.startswith("- "):
            out = "-" + out[2:]
        return out

    def __repr__(self):
        return "Poly(%s)" % self


# ---------------------------------------------------------------------------
# Exact division, gcd, squarefree part
# ---------------------------------------------------------------------------


def exact_divide(f, g):
    """Quotient q with f = q*g exactly, or None when no such polynomial exists.

    A single polynomial is a Groebner basis of the ideal it generates, so
    leading-term reduction decides membership: the first irreducible leading
    term certifies non-divisibility.
    """
    if g.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    f._check(g)
    chart = f.chart
    if f.is_zero():
        return Poly.zero(chart)
    ge, gc = g.leading()
    q = {}
    r = f
    while not r.is_zero():
        re, rc = r.leading()
        qe = tuple(a - b for a, b in zip(re, ge))
        if any(k < 0 for k in qe):
            return None
        qc = rc / gc
        q[qe] = qc
        r = r - Poly(chart, {qe: qc}, _clean=True) * g
    return Poly(chart, q, _clean=True)


def _univar_view(f, i):
    """View f as univariate in variable i: dict degree -> coefficient Poly
    (the coefficient polys keep the full chart with slot i zeroed)."""
    chart = f.chart
    out = {}
    for e, c in f.terms.items():
        d = e[i]
        ne = list(e)
        ne[i] = 0
        coeff = out.setdefault(d, {})
        coeff[tuple(ne)] = coeff.get(tuple(ne), Fraction(0)) + c
    return {d: Poly(chart, t) for d, t in out.items() if any(v != 0 for v in t.values())}


def _from_univar(view, i, chart):
    res = {}
    for d, p in view.items():
        for e, c in p.terms.items():
            ne = list(e)
            ne[i] += d
            res[tuple(ne)] = c
    return Poly(chart, res)


def _shift_mul(p, i, d):
    res = {}
    for e, c in p.terms.items():
        ne = list(e)
        ne[i] += d
        res[tuple(ne)] = c
    return Poly(p.chart, res, _clean=True)


def _pseudo_rem(a, b, i):
    """Pseudo-remainder of a by b in variable i (coefficients multiplied up)."""
    db = b.degree_in(b.chart.variables[i])
    lb = _univar_view(b, i)[db]
    r = a
    var = a.chart.variables[i]
    while not r.is_zero() and r.degree_in(var) >= db:
        dr = r.degree_in(var)
        lr = _univar_view(r, i)[dr]
        r = lb * r - _shift_mul(lr, i, dr - db) * b
    return r


def poly_gcd(f, g):
    """GCD over Q[x1..xn], content-1 with positive leading coefficient.

    Primitive Euclidean remainder sequence, recursing through the variables;
    no factorization is ever needed.
    """
    chart = f.chart
    f._check(g)
    if f.is_zero() and g.is_zero():
        raise ZeroPolynomial("gcd(0, 0) is undefined")
    if f.is_zero():
        return g.unit_normalized()
    if g.is_zero():
        return f.unit_normalized()
    used = f.variables_used() | g.variables_used()
    if not used:
        return Poly.const(chart, 1)
    i = max(chart.index(v) for v in used)

    def content_pp(p):
        view = _univar_view(p, i)
        coeffs = list(view.values())
        cont = coeffs[0]
        for c in coeffs[1:]:
            cont = poly_gcd(cont, c)
            if cont.is_constant():
                break
        cont = cont.unit_normalized() if not cont.is_constant() else Poly.const(chart, 1)
        pp = exact_divide(p, cont)
        assert pp is not None
        return cont, pp

    cf, pf = content_pp(f)
    cg, pg = content_pp(g)
    c = poly_gcd(cf, cg)
    a, b = pf, pg
    var = chart.variables[i]
    if a.degree_in(var) < b.degree_in(var):
        a, b = b, a
    while not b.is_zero():
        r = _pseudo_rem(a, b, i)
        if r.is_zero():
            a, b = b, r
            break
        _, r = content_pp(r)
        a, b = b, r
    _, a = content_pp(a)
    return (c * a).unit_normalized()


def gcd_content(polys):
    """GCD of a list of polynomials, content-normalized; 1 when coprime."""
    polys = [p for p in polys if not p.is_zero()]
    if not polys:
        raise ZeroPolynomial("gcd of all-zero input")
    g = polys[0]
    for p in polys[1:]:
        g = poly_gcd(g, p)
        if g.is_constant():
            break
    return g.unit_normalized() if not g.is_constant() else Poly.const(g.chart, 1)


def squarefree_part(f):
    """Generator of the radical of <f>: f / gcd(f, all partials), normalized.

    Valid over characteristic zero; avoids any factorization.
    """
    if f.is_zero():
        raise ZeroPolynomial("squarefree part of 0")
    polys = [f] + [f.diff(v) for v in f.chart.variables]
    polys = [p for p in polys if not p.is_zero()]
    g = gcd_content(polys)
    q = exact_divide(f, g)
    assert q is not None
    return q.unit_normalized()


# ---------------------------------------------------------------------------
# Localized fractions  num / gen^power
# ---------------------------------------------------------------------------


class Localized:
    """A fraction num/gen^power whose denominator is a power of one declared
    localization generator (in practice an anchor determinant).

    `gen is None` encodes the trivial localization: the value is plain
    polynomial and the power must stay 0.
    """

    __slots__ = ("num", "power", "gen")

    def __init__(self, num, power=0, gen=None):
        if power < 0:
            raise ValueError("negative localization power")
        if gen is None and power != 0:
            raise ValueError("nontrivial power requires a localization generator")
        # reduce: cancel as many generator factors as possible
        while power > 0 and not num.is_zero():
            q = exact_divide(num, gen)
            if q is None:
                break
            num = q
            power -= 1
        if num.is_zero():
            power = 0
        self.num = num
        self.power = power
        self.gen = gen if power > 0 else gen  # keep gen for context even at power 0

    @classmethod
    def from_poly(cls, p, gen=None):
        return cls(p, 0, gen)

    def is_zero(self):
        return self.num.is_zero()

    def is_poly(self):
        return self.power == 0

    def as_poly(self):
        if self.power != 0:
            raise ValueError("not a polynomial: %s" % self)
        return self.num

    def _merge_gen(self, other):
        if self.gen is None:
            return other.gen
        if other.gen is None:
            return self.gen
        if self.gen != other.gen:
            raise ValueError("incompatible localization generators")
        return self.gen

    def __add__(self, other):
        if isinstance(other, Poly):
            other = Localized.from_poly(other, self.gen)
        gen = self._merge_gen(other)
        k = max(self.power, other.power)
        a = self.num * (gen ** (k - self.power) if k > self.power else 1)
        b = other.num * (gen ** (k - other.power) if k > other.power else 1)
        return Localized(a + b, k, gen)

    def __neg__(self):
        return Localized(-self.num, self.power, self.gen)

    def __sub__(self, other):
        if isinstance(other, Poly):
            other = Localized.from_poly(other, self.gen)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Localized(self.num * other, self.power, self.gen)
        if isinstance(other, Poly):
            other = Localized.from_poly(other, self.gen)
        gen = self._merge_gen(other)
        return Localized(self.num * other.num, self.power + other.power, gen)

    __rmul__ = __mul__

    def diff(self, var):
        if self.power == 0:
            return Localized(self.num.diff(var), 0, self.gen)
        # d(n/g^k) = (n' g - k n g') / g^(k+1)
        g = self.gen
        n = self.num
        return Localized(n.diff(var) * g - self.power * n * g.diff(var), self.power + 1, g)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Poly)):
            return self.power == 0 and self.num == other
        if not isinstance(other, Localized):
            return NotImplemented
        if self.gen is not None and other.gen is not None and self.gen != other.gen:
            return False
        return self.power == other.power and self.num == other.num

    __hash__ = None

    def __str__(self):
        if self.power == 0:
            return str(self.num)
        den = "(%s)" % self.gen if self.power == 1 else "(%s)^%d" % (self.gen, self.power)
        return "(%s)/%s" % (self.num, den)

    def __repr__(self):
        return "Localized(%s)" % self

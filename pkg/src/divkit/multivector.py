"""Graded exterior calculus on a polynomial chart.

`Multivector` holds polyvector fields with Poly components over the basis
d/dx_{i1} ^ ... ^ d/dx_{ik}; `DiffForm` holds differential forms whose
components may be `Localized` fractions (denominators a power of one
declared generator, as produced by coframe inversion).

The Schouten-Nijenhuis bracket is computed by the decomposable expansion

    [X1^...^Xp, Y1^...^Yq] = sum_{i,j} (-1)^(i+j) [Xi,Yj] ^ X...^Y...

extended bilinearly, with the function-Leibniz rule in degree zero; on
vector fields it is the ordinary Lie bracket.  The k-th partial Pfaffian is
pi^k / k!, so printed values match the usual wedge-power literals.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial

from .rings import ChartMismatch, Localized, Poly


class DegreeMismatch(ValueError):
    pass


def merge_indices(a, b):
    """Merge two strictly increasing index tuples; (sign, merged) or None."""
    if set(a) & set(b):
        return None
    merged = a + b
    # count inversions of the concatenation (insertion sort parity)
    sign = 1
    lst = list(merged)
    for i in range(1, len(lst)):
        j = i
        while j > 0 and lst[j - 1] > lst[j]:
            lst[j - 1], lst[j] = lst[j], lst[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(lst)


def sort_indices(idx):
    """(sign, sorted tuple) for an index tuple without repeats, else None."""
    if len(set(idx)) != len(idx):
        return None
    return merge_indices(idx, ())


class _Graded:
    """Shared machinery for Multivector and DiffForm."""

    __slots__ = ("chart", "degree", "comps")

    def _make(self, comps):
        raise NotImplementedError

    def _coerce(self, value):
        raise NotImplementedError

    def is_zero(self):
        return not self.comps

    def _check(self, other):
        if self.chart != other.chart:
            raise ChartMismatch("%r vs %r" % (self.chart, other.chart))

    def __add__(self, other):
        self._check(other)
        if self.degree != other.degree:
            if self.is_zero():
                return other
            if other.is_zero():
                return self
            raise DegreeMismatch("cannot add degrees %d and %d" % (self.degree, other.degree))
        res = dict(self.comps)
        for idx, c in other.comps.items():
            s = res.get(idx)
            s = c if s is None else s + c
            if _is_zero(s):
                res.pop(idx, None)
            else:
                res[idx] = s
        return type(self)(self.chart, self.degree, res)

    def __neg__(self):
        return type(self)(self.chart, self.degree, {i: -c for i, c in self.comps.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return type(self)(
            self.chart, self.degree, {i: v * c for i, v in self.comps.items()}
        )

    def __mul__(self, c):
        if isinstance(c, (int, Fraction, Poly)):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, type(self)):
            return NotImplemented
        if self.chart != other.chart:
            return False
        if self.is_zero() and other.is_zero():
            return True
        return self.degree == other.degree and self.comps == other.comps

    __hash__ = None

    def component(self, idx):
        return self.comps.get(tuple(idx))

    def wedge(self, other):
        self._check(other)
        deg = self.degree + other.degree
        cls = type(self)
        if deg > self.chart.dimension:
            return cls(self.chart, min(deg, self.chart.dimension), {})
        res = {}
        for ia, ca in self.comps.items():
            for ib, cb in other.comps.items():
                m = merge_indices(ia, ib)
                if m is None:
                    continue
                sign, idx = m
                v = ca * cb
                if sign < 0:
                    v = -v
                s = res.get(idx)
                s = v if s is None else s + v
                if _is_zero(s):
                    res.pop(idx, None)
                else:
                    res[idx] = s
        return cls(self.chart, deg, res)


def _is_zero(v):
    if isinstance(v, Poly):
        return v.is_zero()
    if isinstance(v, Localized):
        return v.is_zero()
    return v == 0


class Multivector(_Graded):
    """Degree-k polyvector field with Poly components over increasing tuples."""

    def __init__(self, chart, degree, comps=None):
        if degree < 0 or degree > chart.dimension:
            raise DegreeMismatch("degree %d out of range for %r" % (degree, chart))
        self.chart = chart
        self.degree = degree
        clean = {}
        if comps:
            for idx, c in comps.items():
                idx = tuple(idx)
                if len(idx) != degree or list(idx) != sorted(idx):
                    raise ValueError("bad index tuple %r for degree %d" % (idx, degree))
                if not isinstance(c, Poly):
                    c = Poly.const(chart, c)
                if not c.is_zero():
                    clean[idx] = c
        self.comps = clean

    @classmethod
    def zero(cls, chart, degree=0):
        return cls(chart, degree, {})

    @classmethod
    def function(cls, p):
        return cls(p.chart, 0, {(): p})

    @classmethod
    def basis_vector(cls, chart, i):
        return cls(chart, 1, {(i,): Poly.const(chart, 1)})

    @classmethod
    def vector(cls, chart, coeffs):
        """Vector field from a coefficient list (one Poly per variable)."""
        return cls(chart, 1, {(i,): c for i, c in enumerate(coeffs)})

    def vector_coeffs(self):
        if self.degree != 1:
            raise DegreeMismatch("not a vector field")
        return [self.comps.get((i,), Poly.zero(self.chart)) for i in range(self.chart.dimension)]

    def as_function(self):
        if self.degree != 0:
            raise DegreeMismatch("not a function")
        return self.comps.get((), Poly.zero(self.chart))

    def apply_to(self, f):
        """Derivation action of a vector field on a Poly."""
        if self.degree != 1:
            raise DegreeMismatch("only vector fields act on functions")
        out = Poly.zero(self.chart)
        for (i,), c in self.comps.items():
            out = out + c * f.diff(self.chart.variables[i])
        return out

    def map_coeffs(self, fn):
        return Multivector(self.chart, self.degree, {i: fn(c) for i, c in self.comps.items()})

    def __str__(self):
        return _graded_str(self, "D", lambda i: self.chart.variables[i])

    def __repr__(self):
        return "Multivector(%s)" % self


class DiffForm(_Graded):
    """Degree-k differential form; components are Localized fractions."""

    def __init__(self, chart, degree, comps=None, gen=None):
        if degree < 0 or degree > chart.dimension:
            raise DegreeMismatch("degree %d out of range for %r" % (degree, chart))
        self.chart = chart
        self.degree = degree
        self.gen = gen
        clean = {}
        if comps:
            for idx, c in comps.items():
                idx = tuple(idx)
                if len(idx) != degree or list(idx) != sorted(idx):
                    raise ValueError("bad index tuple %r for degree %d" % (idx, degree))
                if isinstance(c, Poly):
                    c = Localized.from_poly(c, gen)
                if not c.is_zero():
                    clean[idx] = c
                    if gen is None and c.gen is not None:
                        gen = c.gen
        self.comps = clean
        self.gen = gen

    __slots__ = ("gen",)

    def _merged_gen(self, other):
        if self.gen is None:
            return other.gen
        if other.gen is None or other.gen == self.gen:
            return self.gen
        raise ValueError("incompatible localization generators on forms")

    def __add__(self, other):
        out = _Graded.__add__(self, other)
        out.gen = self._merged_gen(other)
        return out

    def wedge(self, other):
        out = _Graded.wedge(self, other)
        out.gen = self._merged_gen(other)
        return out

    def __neg__(self):
        return DiffForm(self.chart, self.degree, {i: -c for i, c in self.comps.items()}, self.gen)

    def scale(self, c):
        return DiffForm(
            self.chart, self.degree, {i: v * c for i, v in self.comps.items()}, self.gen
        )

    @classmethod
    def zero(cls, chart, degree=0, gen=None):
        return cls(chart, degree, {}, gen)

    @classmethod
    def function(cls, p, gen=None):
        if isinstance(p, Poly):
            chart = p.chart
        else:
            chart = p.num.chart
        return cls(chart, 0, {(): p}, gen)

    @classmethod
    def basis_form(cls, chart, i, gen=None):
        return cls(chart, 1, {(i,): Poly.const(chart, 1)}, gen)

    def is_polynomial(self):
        return all(c.is_poly() for c in self.comps.values())

    def map_coeffs(self, fn):
        return DiffForm(self.chart, self.degree, {i: fn(c) for i, c in self.comps.items()}, self.gen)

    def __str__(self):
        return _graded_str(self, "d", lambda i: self.chart.variables[i])

    def __repr__(self):
        return "DiffForm(%s)" % self


def _graded_str(obj, prefix, name):
    if not obj.comps:
        return "0"
    parts = []
    for idx in sorted(obj.comps):
        c = obj.comps[idx]
        basis = "^^".join(prefix + name(i) for i in idx)
        cs = str(c)
        if not basis:
            parts.append(cs)
            continue
        if cs == "1":
            parts.append(basis)
        elif cs == "-1":
            parts.append("-" + basis)
        else:
            if ("+" in cs or (" - " in cs) or cs.startswith("(")) and not (
                cs.startswith("(") and cs.endswith(")")
            ):
                cs = "(%s)" % cs
            parts.append(cs + "*" + basis)
    return " + ".join(parts).replace("+ -", "- ")


# ---------------------------------------------------------------------------
# Schouten-Nijenhuis bracket
# ---------------------------------------------------------------------------


def _term_factors(chart, idx, coeff):
    """Split a monomial term coeff * D_{i1}^...^D_{ip} into vector factors,
    the coefficient riding on the first factor."""
    factors = []
    for pos, i in enumerate(idx):
        factors.append((coeff if pos == 0 else Poly.const(chart, 1), i))
    return factors


def _accumulate(res, idx, coeff):
    s = sort_indices(idx)
    if s is None or coeff.is_zero():
        return
    sign, key = s
    v = coeff if sign > 0 else -coeff
    old = res.get(key)
    v = v if old is None else old + v
    if v.is_zero():
        res.pop(key, None)
    else:
        res[key] = v


def schouten_bracket(a, b):
    """Schouten-Nijenhuis bracket of Multivectors; degree |a|+|b|-1.

    Convention fixed by the decomposable expansion; on vector fields this is
    the Lie bracket, and [v, f] = v(f) for functions f.
    """
    a._check(b)
    chart = a.chart
    p, q = a.degree, b.degree
    deg = p + q - 1
    if deg < 0:
        # [f, g] = 0 for functions; represent as the zero function
        return Multivector.zero(chart, 0)
    if deg > chart.dimension:
        # indices must repeat, so the bracket vanishes identically
        return Multivector.zero(chart, chart.dimension)
    res = {}
    vars_ = chart.variables
    for ia, ca in a.comps.items():
        for ib, cb in b.comps.items():
            if p == 0 and q == 0:
                continue
            if q == 0:
                # [a, g] = sum_i (-1)^(p-i) (X_i g) X_1^..skip i..^X_p
                fac = _term_factors(chart, ia, ca)
                for pos in range(p):
                    cf, i = fac[pos]
                    deriv = cf * cb.diff(vars_[i])
                    rest = fac[:pos] + fac[pos + 1 :]
                    coeff = deriv
                    idx = []
                    for rc, ri in rest:
                        coeff = coeff * rc
                        idx.append(ri)
                    if (p - (pos + 1)) % 2 == 1:
                        coeff = -coeff
                    _accumulate(res, tuple(idx), coeff)
                continue
            if p == 0:
                # [f, b] = sum_j (-1)^j (Y_j f) Y_1^..skip j..^Y_q
                fac = _term_factors(chart, ib, cb)
                for pos in range(q):
                    cf, j = fac[pos]
                    deriv = cf * ca.diff(vars_[j])
                    rest = fac[:pos] + fac[pos + 1 :]
                    coeff = deriv
                    idx = []
                    for rc, ri in rest:
                        coeff = coeff * rc
                        idx.append(ri)
                    if (pos + 1) % 2 == 1:
                        coeff = -coeff
                    _accumulate(res, tuple(idx), coeff)
                continue
            fa = _term_factors(chart, ia, ca)
            fb = _term_factors(chart, ib, cb)
            for pa in range(p):
                cfa, i = fa[pa]
                for pb in range(q):
                    cfb, j = fb[pb]
                    # [cfa D_i, cfb D_j] = cfa (d_i cfb) D_j - cfb (d_j cfa) D_i
                    pieces = []
                    d1 = cfa * cfb.diff(vars_[i])
                    if not d1.is_zero():
                        pieces.append((d1, j))
                    d2 = cfb * cfa.diff(vars_[j])
                    if not d2.is_zero():
                        pieces.append((-d2, i))
                    if not pieces:
                        continue
                    rest = fa[:pa] + fa[pa + 1 :] + fb[:pb] + fb[pb + 1 :]
                    sign = -1 if (pa + pb) % 2 == 1 else 1
                    for pc, k in pieces:
                        coeff = pc if sign > 0 else -pc
                        idx = [k]
                        for rc, ri in rest:
                            coeff = coeff * rc
                            idx.append(ri)
                        _accumulate(res, tuple(idx), coeff)
    return Multivector(chart, deg, res)


def lie_bracket(v, w):
    """Lie bracket of vector fields (= Schouten bracket in degree one)."""
    return schouten_bracket(v, w)


# ---------------------------------------------------------------------------
# Contraction, pairing, Lie derivative, exterior derivative
# ---------------------------------------------------------------------------


def interior_product(v, w):
    """Contraction of a vector field into a DiffForm (first slot)."""
    if v.degree != 1:
        raise DegreeMismatch("interior product needs a vector field")
    v._check(w)
    if w.degree == 0:
        return DiffForm.zero(w.chart, 0, w.gen)
    res = {}
    vc = {i: c for (i,), c in v.comps.items()}
    for idx, c in w.comps.items():
        for pos, i in enumerate(idx):
            if i not in vc:
                continue
            coeff = c * vc[i]
            if pos % 2 == 1:
                coeff = -coeff
            key = idx[:pos] + idx[pos + 1 :]
            old = res.get(key)
            coeff = coeff if old is None else old + coeff
            if coeff.is_zero():
                res.pop(key, None)
            else:
                res[key] = coeff
    return DiffForm(w.chart, w.degree - 1, res, w.gen)


def pairing(form, mv):
    """Full pairing of a k-form with a k-multivector; Poly or Localized."""
    form._check(mv)
    if form.degree != mv.degree:
        raise DegreeMismatch("pairing needs equal degrees")
    total = Localized.from_poly(Poly.zero(form.chart), form.gen)
    for idx, c in form.comps.items():
        m = mv.comps.get(idx)
        if m is not None:
            total = total + c * m
    if total.is_poly():
        return total.as_poly()
    return total


def exterior_derivative(w):
    """Exact d with the quotient rule on Localized coefficients; d o d = 0."""
    chart = w.chart
    if w.degree >= chart.dimension:
        return DiffForm.zero(chart, min(w.degree + 1, chart.dimension), w.gen)
    res = {}
    for idx, c in w.comps.items():
        for i, var in enumerate(chart.variables):
            dc = c.diff(var)
            if dc.is_zero():
                continue
            m = merge_indices((i,), idx)
            if m is None:
                continue
            sign, key = m
            coeff = dc if sign > 0 else -dc
            old = res.get(key)
            coeff = coeff if old is None else old + coeff
            if coeff.is_zero():
                res.pop(key, None)
            else:
                res[key] = coeff
    return DiffForm(chart, w.degree + 1, res, w.gen)


def lie_derivative(v, t):
    """Lie derivative along a vector field: [v, .] on multivectors (and
    functions), Cartan's formula on forms."""
    if isinstance(t, Poly):
        return v.apply_to(t)
    if isinstance(t, Multivector):
        return schouten_bracket(v, t)
    if isinstance(t, DiffForm):
        return interior_product(v, exterior_derivative(t)) + exterior_derivative(
            interior_product(v, t)
        )
    raise TypeError("cannot take a Lie derivative of %r" % (t,))


def partial_pfaffian(pi, k):
    """k-th partial Pfaffian pi^k / k! of a bivector."""
    if pi.degree != 2:
        raise DegreeMismatch("partial Pfaffian needs a bivector")
    if k < 0 or 2 * k > pi.chart.dimension:
        raise ValueError("partial Pfaffian order %d out of range" % k)
    out = Multivector.function(Poly.const(pi.chart, 1))
    for _ in range(k):
        out = out.wedge(pi)
    return out.scale(Fraction(1, factorial(k)))


def bivector_matrix(pi):
    """Full antisymmetric coefficient matrix of a bivector."""
    n = pi.chart.dimension
    zero = Poly.zero(pi.chart)
    m = [[zero for _ in range(n)] for _ in range(n)]
    for (i, j), c in pi.comps.items():
        m[i][j] = c
        m[j][i] = -c
    return m


def bivector_from_matrix(chart, m):
    n = chart.dimension
    comps = {}
    for i in range(n):
        for j in range(i + 1, n):
            if not m[i][j].is_zero():
                comps[(i, j)] = m[i][j]
    return Multivector(chart, 2, comps)

"""Lie algebroids of divisor-type presented by polynomial anchor frames.

A frame is a list of n polynomial vector fields (n = chart dimension) whose
coefficient matrix -- the anchor -- has nonzero determinant, so the frame
spans TX over the fraction field and the algebroid is almost-injective.
Involutivity is certified by solving every pairwise Lie bracket back into
the frame with Cramer's rule and demanding that all denominators cancel.

The algebroid differential d_A is computed by conjugation through the
anchor: convert a coframe form to an ordinary differential form with
denominators a power of det(rho), apply d, convert back, and assert that
the result is polynomial again (guaranteed by involutivity).
"""

from __future__ import annotations

from .rings import ChartMismatch, Localized, Poly, exact_divide
from .divisors import DivisorClass, classify, make_ideal, preserves
from .multivector import (
    DiffForm,
    Multivector,
    exterior_derivative,
    lie_bracket,
    merge_indices,
)


class DegenerateFrame(ValueError):
    pass


class NotInvolutive(ValueError):
    def __init__(self, pair, witness):
        self.pair = pair
        self.witness = witness
        super().__init__(
            "bracket of generators %d,%d leaves the frame module: coefficient %s"
            % (pair[0] + 1, pair[1] + 1, witness)
        )


class NotInModule(ValueError):
    def __init__(self, witness):
        self.witness = witness
        super().__init__("vector field is not in the frame module: coefficient %s" % (witness,))


class NotASubalgebroid(ValueError):
    pass


class NotDivisibleGenerator(ValueError):
    def __init__(self, index, witness):
        self.index = index
        self.witness = witness
        super().__init__(
            "generator %d is not divisible by the ideal generator (%s)" % (index + 1, witness)
        )


class UnsupportedOverlap(ValueError):
    pass


class BadParams(ValueError):
    pass


# ---------------------------------------------------------------------------
# Small exact linear algebra over Poly
# ---------------------------------------------------------------------------


def poly_det(m):
    n = len(m)
    if n == 1:
        return m[0][0]
    chart = m[0][0].chart
    total = Poly.zero(chart)
    for j in range(n):
        if m[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1 :] for row in m[1:]]
        term = m[0][j] * poly_det(minor)
        total = total + (term if j % 2 == 0 else -term)
    return total


def poly_adjugate(m):
    """adj(m) with m * adj(m) = det(m) * I."""
    n = len(m)
    chart = m[0][0].chart
    if n == 1:
        return [[Poly.const(chart, 1)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [
                [m[r][c] for c in range(n) if c != j] for r in range(n) if r != i
            ]
            cof = poly_det(minor)
            adj[j][i] = cof if (i + j) % 2 == 0 else -cof
    return adj


def mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    chart = a[0][0].chart
    out = [[Poly.zero(chart) for _ in range(m)] for _ in range(n)]
    for i in range(n):
        for j in range(m):
            s = Poly.zero(chart)
            for t in range(k):
                if a[i][t].is_zero() or b[t][j].is_zero():
                    continue
                s = s + a[i][t] * b[t][j]
            out[i][j] = s
    return out


def mat_transpose(a):
    return [list(col) for col in zip(*a)]


# ---------------------------------------------------------------------------
# Anchor frames
# ---------------------------------------------------------------------------


class AnchorFrame:
    """A divisor-type Lie algebroid presented by n vector-field generators."""

    __slots__ = ("chart", "generators", "det", "structure", "label", "_adj")

    def __init__(self, chart, generators, label=None, certify=True):
        if len(generators) != chart.dimension:
            raise BadParams(
                "need %d generators on %r, got %d"
                % (chart.dimension, chart, len(generators))
            )
        for g in generators:
            if g.chart != chart:
                raise ChartMismatch("generator on a different chart")
            if g.degree != 1:
                raise BadParams("frame generators must be vector fields")
        self.chart = chart
        self.generators = list(generators)
        self.det = poly_det(self.matrix())
        if self.det.is_zero():
            raise DegenerateFrame(
                "anchor determinant vanishes identically; not of divisor-type"
            )
        self.label = label
        self._adj = None
        self.structure = None
        if certify:
            self.structure = check_involutive(self)

    def matrix(self):
        """Anchor matrix R with R[j][i] = coefficient of D_j in generator i."""
        n = self.chart.dimension
        zero = Poly.zero(self.chart)
        m = [[zero for _ in range(n)] for _ in range(n)]
        for i, g in enumerate(self.generators):
            for (j,), c in g.comps.items():
                m[j][i] = c
        return m

    def adjugate(self):
        if self._adj is None:
            self._adj = poly_adjugate(self.matrix())
        return self._adj

    def divisor_generator(self):
        return self.det.unit_normalized()

    def __eq__(self, other):
        return (
            isinstance(other, AnchorFrame)
            and self.chart == other.chart
            and self.generators == other.generators
        )

    __hash__ = None

    def __str__(self):
        return "frame(%s)" % "; ".join(str(g) for g in self.generators)

    __repr__ = __str__


def expand_in_frame(v, frame):
    """Coefficients c with  sum_i c_i * generator_i = v, all polynomial.

    Solves by Cramer's rule over the fraction field and demands exact
    cancellation of the determinant denominators.
    """
    if v.chart != frame.chart:
        raise ChartMismatch("vector field on a different chart")
    if v.degree != 1:
        raise BadParams("can only expand vector fields")
    adj = frame.adjugate()
    det = frame.det
    col = v.vector_coeffs()
    out = []
    for i in range(frame.chart.dimension):
        num = Poly.zero(frame.chart)
        for j in range(frame.chart.dimension):
            if adj[i][j].is_zero() or col[j].is_zero():
                continue
            num = num + adj[i][j] * col[j]
        q = exact_divide(num, det)
        if q is None:
            raise NotInModule(Localized(num, 1, det.unit_normalized()))
        out.append(q)
    return out


def check_involutive(frame):
    """Structure coefficients c^k_ij with [e_i, e_j] = sum_k c^k_ij e_k,
    or raise NotInvolutive with the offending pair and fractional witness."""
    n = frame.chart.dimension
    table = {}
    for i in range(n):
        for j in range(i + 1, n):
            br = lie_bracket(frame.generators[i], frame.generators[j])
            try:
                coeffs = expand_in_frame(br, frame)
            except NotInModule as e:
                raise NotInvolutive((i, j), e.witness) from None
            table[(i, j)] = coeffs
    return table


def frame_divisor(frame):
    return make_ideal(frame.det)


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------


def _coord_fields(chart):
    return [Multivector.basis_vector(chart, i) for i in range(chart.dimension)]


def catalog(kind, chart, *params):
    """Catalog anchor frames; generators are ordered by chart variable slot.

    kinds: tx | log(z) | zero(z) | bk(z, k) | scattering(z) | elliptic(x, y)
           | elliptic_log(x, y) | nc_log(z1, ..., zj)
    """
    base = _coord_fields(chart)
    gens = list(base)
    if kind == "tx":
        label = ("tx",)
    elif kind in ("log", "zero", "scattering", "bk"):
        if kind == "bk":
            if len(params) != 2:
                raise BadParams("bk needs (variable, k)")
            z, k = params
            if not isinstance(k, int) or k < 1:
                raise BadParams("bk power must be an integer >= 1")
        else:
            if len(params) != 1:
                raise BadParams("%s needs the hypersurface variable" % kind)
            z, k = params[0], None
        iz = chart.index(z)
        zp = Poly.var(chart, z)
        if kind == "log":
            gens[iz] = zp * base[iz]
        elif kind == "bk":
            gens[iz] = (zp**k) * base[iz]
        elif kind == "zero":
            gens = [zp * g for g in base]
        elif kind == "scattering":
            gens = [zp * g for g in base]
            gens[iz] = zp * zp * base[iz]
        label = (kind, z) if k is None else (kind, z, k)
    elif kind in ("elliptic", "elliptic_log"):
        if len(params) != 2 or params[0] == params[1]:
            raise BadParams("%s needs two distinct variables" % kind)
        u, v = params
        iu, iv = chart.index(u), chart.index(v)
        up, vp = Poly.var(chart, u), Poly.var(chart, v)
        euler = up * base[iu] + vp * base[iv]
        if kind == "elliptic":
            rot = up * base[iv] - vp * base[iu]
            gens[iu], gens[iv] = euler, rot
        else:
            swirl = up * (vp * base[iu] - up * base[iv])
            gens[iu], gens[iv] = euler, swirl
        label = (kind, u, v)
    elif kind == "nc_log":
        if not params:
            raise BadParams("nc_log needs at least one hypersurface variable")
        if len(set(params)) != len(params):
            raise BadParams("nc_log variables must be distinct")
        for z in params:
            iz = chart.index(z)
            gens[iz] = Poly.var(chart, z) * base[iz]
        label = ("nc_log",) + tuple(params)
    else:
        raise BadParams("unknown catalog frame kind %r" % (kind,))
    return AnchorFrame(chart, gens, label=label)


def _modified_slots(frame):
    """Variable slots whose column differs from the coordinate frame."""
    if frame.label is None:
        return None
    kind = frame.label[0]
    n = frame.chart.dimension
    if kind == "tx":
        return set()
    if kind in ("log", "bk"):
        return {frame.chart.index(frame.label[1])}
    if kind in ("zero", "scattering"):
        return set(range(n))
    if kind in ("elliptic", "elliptic_log"):
        return {frame.chart.index(frame.label[1]), frame.chart.index(frame.label[2])}
    if kind == "nc_log":
        return {frame.chart.index(z) for z in frame.label[1:]}
    return None


def fiber_product(fa, fb):
    """Fiber product of two catalog frames over the same chart.

    Supported: modifications touching disjoint variables (merge columns),
    with log x log delegating to the normal-crossing constructor; TX is the
    unit.  Anything overlapping raises UnsupportedOverlap.
    """
    if fa.chart != fb.chart:
        raise ChartMismatch("fiber product needs a common chart")
    sa, sb = _modified_slots(fa), _modified_slots(fb)
    if sa is None or sb is None:
        raise UnsupportedOverlap("fiber products are only defined for catalog frames")
    if not sa:
        return fb
    if not sb:
        return fa
    if sa & sb:
        raise UnsupportedOverlap(
            "supports overlap in variables %s"
            % sorted(fa.chart.variables[i] for i in sa & sb)
        )
    if fa.label[0] in ("zero", "scattering") or fb.label[0] in ("zero", "scattering"):
        raise UnsupportedOverlap("zero/scattering frames rescale every direction")
    log_kinds = ("log", "nc_log")
    if fa.label[0] in log_kinds and fb.label[0] in log_kinds:
        zs = fa.label[1:] + fb.label[1:]
        return catalog("nc_log", fa.chart, *zs)
    gens = []
    for i in range(fa.chart.dimension):
        if i in sa:
            gens.append(fa.generators[i])
        elif i in sb:
            gens.append(fb.generators[i])
        else:
            gens.append(Multivector.basis_vector(fa.chart, i))
    label = ("product", fa.label, fb.label)
    return AnchorFrame(fa.chart, gens, label=label)


# ---------------------------------------------------------------------------
# Elementary modifications
# ---------------------------------------------------------------------------

_SMOOTH_TAGS = (
    DivisorClass.TRIVIAL,
    DivisorClass.LOG,
    DivisorClass.BPOWER,
    DivisorClass.ELLIPTIC,
)


def _require_smooth_ideal(ideal):
    tag = classify(ideal)
    if tag.tag not in _SMOOTH_TAGS:
        raise BadParams(
            "modification ideal %s is not smooth-supported in the catalog sense (%s)"
            % (ideal, tag)
        )
    return tag


def lower_modify(frame, keep, ideal):
    """Multiply the generators outside `keep` by the ideal generator.

    `keep` (0-based indices) must span a Lie subalgebroid along the zero
    locus: every kept generator preserves the ideal, and brackets of kept
    generators re-expand in kept generators modulo the ideal.  (Ideal
    preservation is needed on top of the bracket condition: a kept
    generator not tangent to the locus destroys involutivity.)
    """
    _require_smooth_ideal(ideal)
    keep = set(keep)
    n = frame.chart.dimension
    if not keep <= set(range(n)):
        raise BadParams("keep indices out of range")
    gen = ideal.generator
    for i in sorted(keep):
        ok, _ = preserves(frame.generators[i], ideal)
        if not ok:
            raise NotASubalgebroid(
                "kept generator e%d does not preserve %s" % (i + 1, ideal)
            )
    for i in sorted(keep):
        for j in sorted(keep):
            if j <= i:
                continue
            coeffs = frame.structure[(i, j)]
            for k in range(n):
                if k in keep or coeffs[k].is_zero():
                    continue
                if exact_divide(coeffs[k], gen) is None:
                    raise NotASubalgebroid(
                        "bracket [e%d, e%d] has component %s e%d not divisible by %s"
                        % (i + 1, j + 1, coeffs[k], k + 1, gen)
                    )
    gens = [
        g if i in keep else gen * g for i, g in enumerate(frame.generators)
    ]
    try:
        return AnchorFrame(frame.chart, gens, label=None)
    except NotInvolutive as e:  # pragma: no cover - theory says impossible
        raise RuntimeError("involutivity lost after lower modification: %s" % e)


def upper_modify(frame, kernel, ideal):
    """Divide the generators outside `kernel` by the ideal generator
    (inverse to lower_modify with matching data)."""
    _require_smooth_ideal(ideal)
    kernel = set(kernel)
    n = frame.chart.dimension
    if not kernel <= set(range(n)):
        raise BadParams("kernel indices out of range")
    gen = ideal.generator
    gens = []
    for i, g in enumerate(frame.generators):
        if i in kernel:
            gens.append(g)
            continue
        comps = {}
        for idx, c in g.comps.items():
            q = exact_divide(c, gen)
            if q is None:
                raise NotDivisibleGenerator(i, Localized(c, 1, gen))
            comps[idx] = q
        gens.append(Multivector(frame.chart, 1, comps))
    try:
        return AnchorFrame(frame.chart, gens, label=None)
    except NotInvolutive as e:
        raise RuntimeError("involutivity lost after upper modification: %s" % e)


# ---------------------------------------------------------------------------
# Coframe forms and the algebroid differential
# ---------------------------------------------------------------------------


class CoframeForm:
    """Differential form over a frame's dual coframe, Poly coefficients."""

    __slots__ = ("frame", "degree", "comps")

    def __init__(self, frame, degree, comps=None):
        n = frame.chart.dimension
        if degree < 0 or degree > n:
            raise BadParams("coframe degree %d out of range" % degree)
        self.frame = frame
        self.degree = degree
        clean = {}
        if comps:
            for idx, c in comps.items():
                idx = tuple(idx)
                if len(idx) != degree or list(idx) != sorted(idx) or (idx and idx[-1] >= n):
                    raise BadParams("bad coframe index tuple %r" % (idx,))
                if not isinstance(c, Poly):
                    c = Poly.const(frame.chart, c)
                if not c.is_zero():
                    clean[idx] = c
        self.comps = clean

    @classmethod
    def zero(cls, frame, degree=0):
        return cls(frame, degree, {})

    @classmethod
    def function(cls, frame, p):
        return cls(frame, 0, {(): p})

    @classmethod
    def basis(cls, frame, i):
        return cls(frame, 1, {(i,): Poly.const(frame.chart, 1)})

    def is_zero(self):
        return not self.comps

    def __add__(self, other):
        if self.frame is not other.frame and self.frame != other.frame:
            raise ChartMismatch("coframe forms over different frames")
        if self.degree != other.degree:
            if self.is_zero():
                return other
            if other.is_zero():
                return self
            raise BadParams("cannot add coframe degrees %d and %d" % (self.degree, other.degree))
        res = dict(self.comps)
        for idx, c in other.comps.items():
            s = res.get(idx)
            s = c if s is None else s + c
            if s.is_zero():
                res.pop(idx, None)
            else:
                res[idx] = s
        return CoframeForm(self.frame, self.degree, res)

    def __neg__(self):
        return CoframeForm(self.frame, self.degree, {i: -c for i, c in self.comps.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return CoframeForm(self.frame, self.degree, {i: v * c for i, v in self.comps.items()})

    __mul__ = scale
    __rmul__ = scale

    def wedge(self, other):
        if self.frame is not other.frame and self.frame != other.frame:
            raise ChartMismatch("coframe forms over different frames")
        deg = self.degree + other.degree
        n = self.frame.chart.dimension
        if deg > n:
            return CoframeForm(self.frame, n, {})
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
                if s.is_zero():
                    res.pop(idx, None)
                else:
                    res[idx] = s
        return CoframeForm(self.frame, deg, res)

    def __eq__(self, other):
        if not isinstance(other, CoframeForm):
            return NotImplemented
        if self.frame != other.frame:
            return False
        if self.is_zero() and other.is_zero():
            return True
        return self.degree == other.degree and self.comps == other.comps

    __hash__ = None

    def __str__(self):
        from .multivector import _graded_str

        return _graded_str(self, "e", lambda i: str(i + 1))

    __repr__ = __str__


def coframe_to_diff(form):
    """Express a coframe form as an ordinary DiffForm; coefficients become
    Localized fractions with denominator a power of the anchor determinant."""
    frame = form.frame
    chart = frame.chart
    det = frame.det
    gen = det.unit_normalized()
    unit = det.content() if det.leading()[1] > 0 else -det.content()
    # det = unit * gen with unit rational
    adj = frame.adjugate()
    n = chart.dimension
    # e^i = sum_j adj[i][j]/det dx_j
    rows = [
        [Localized(adj[i][j] * (1 / unit), 1, gen) for j in range(n)] for i in range(n)
    ]
    out = DiffForm.zero(chart, form.degree, gen)
    for idx, c in form.comps.items():
        term = DiffForm.function(Poly.const(chart, 1), gen)
        for i in idx:
            one_form = DiffForm(chart, 1, {(j,): rows[i][j] for j in range(n)}, gen)
            term = term.wedge(one_form)
        out = out + term.scale(c)
    return out


def diff_to_coframe(dform, frame):
    """Inverse conversion: dx_j = sum_i R[j][i] e^i.  The result must come
    out polynomial; a leftover denominator is an internal error."""
    chart = frame.chart
    r = frame.matrix()
    n = chart.dimension
    acc = {}
    for idx, c in dform.comps.items():
        expansion = [((), Poly.const(chart, 1))]
        for j in idx:
            new = []
            for key, coeff in expansion:
                for i in range(n):
                    if r[j][i].is_zero():
                        continue
                    m = merge_indices(key, (i,))
                    if m is None:
                        continue
                    sign, nk = m
                    v = coeff * r[j][i]
                    if sign < 0:
                        v = -v
                    new.append((nk, v))
            merged = {}
            for nk, v in new:
                s = merged.get(nk)
                s = v if s is None else s + v
                merged[nk] = s
            expansion = [(k, v) for k, v in merged.items() if not v.is_zero()]
        for key, coeff in expansion:
            v = c * coeff
            s = acc.get(key)
            s = v if s is None else s + v
            acc[key] = s
    comps = {}
    for key, v in acc.items():
        if v.is_zero():
            continue
        if not v.is_poly():
            raise RuntimeError(
                "conversion to the coframe left a denominator: %s (internal error)" % v
            )
        comps[key] = v.as_poly()
    return CoframeForm(frame, dform.degree, comps)


def algebroid_d(form):
    """Algebroid differential via anchor conjugation (see module docstring)."""
    frame = form.frame
    if frame.structure is None:
        raise BadParams("frame involutivity must be certified before using d_A")
    if form.degree >= frame.chart.dimension:
        return CoframeForm.zero(frame, frame.chart.dimension)
    df = exterior_derivative(coframe_to_diff(form))
    return diff_to_coframe(df, frame)


def pushforward(frame, comps, degree):
    """Push a frame multivector (components over e-index tuples) to TX."""
    out = Multivector.zero(frame.chart, degree)
    for idx, c in comps.items():
        term = Multivector.function(c)
        for i in idx:
            term = term.wedge(frame.generators[i])
        out = out + term
    return out


# ---------------------------------------------------------------------------
# Ideal-algebroid verification report
# ---------------------------------------------------------------------------


class FrameIdealReport:
    __slots__ = ("frame", "ideal", "preserves_all", "certificates", "standard", "relation")

    def __init__(self, frame, ideal, preserves_all, certificates, standard, relation):
        self.frame = frame
        self.ideal = ideal
        self.preserves_all = preserves_all
        self.certificates = certificates
        self.standard = standard
        self.relation = relation

    def __str__(self):
        lines = ["frame/ideal report for %s:" % self.ideal]
        for i, (ok, cert) in enumerate(self.certificates):
            lines.append(
                "  e%d preserves: %s%s"
                % (i + 1, "yes" if ok else "NO", " (certificate %s)" % cert if ok else "")
            )
        lines.append("  standard: %s (%s)" % ("yes" if self.standard else "no", self.relation))
        return "\n".join(lines)


def verify_ideal_algebroid(frame, ideal):
    """Check that every generator preserves the ideal and whether the frame
    divisor reproduces it (standardness), reporting any divisibility found."""
    certs = [preserves(g, ideal) for g in frame.generators]
    fd = frame_divisor(frame)
    standard = fd == ideal
    if standard:
        relation = "frame divisor %s equals the ideal" % fd
    else:
        from .divisors import divides_ideal

        if divides_ideal(fd, ideal):
            relation = "frame divisor %s divides %s" % (fd, ideal)
        elif divides_ideal(ideal, fd):
            relation = "%s divides the frame divisor %s" % (ideal, fd)
        else:
            relation = "frame divisor %s unrelated to %s" % (fd, ideal)
    return FrameIdealReport(
        frame, ideal, all(ok for ok, _ in certs), certs, standard, relation
    )

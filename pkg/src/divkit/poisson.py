"""Poisson verification, divisor-type detection, lifting, modular fields.

Conventions fixed here once and used everywhere:

* sharp map: pi^#(alpha) = pi(alpha, .), anchored by
  hamiltonian_vf(Dx^^Dy, x) = Dy;
* modular vector field: V^i = sum_k d_k Pi^{ki} for the full antisymmetric
  coefficient matrix Pi, anchored so that f*Dx^^Dy on the plane has modular
  field (df/dx) Dy - (df/dy) Dx; the defining volume identity then reads
  L_{X_f} mu = -(L_V f) mu with X_f = pi^#(df) in the sharp convention
  above, and is re-verified symbolically at construction.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .rings import Chart, ChartMismatch, Localized, Poly, exact_divide, gcd_content
from .divisors import DivisorClass, classify, make_ideal, preserves
from .frames import (
    BadParams,
    NotInModule,
    catalog,
    expand_in_frame,
    mat_mul,
    mat_transpose,
    pushforward,
)
from .multivector import (
    DegreeMismatch,
    Multivector,
    bivector_from_matrix,
    bivector_matrix,
    lie_derivative,
    partial_pfaffian,
    schouten_bracket,
)

DEFAULT_GRID_VALUES = (-2, -1, 1, 2, 3)


class NotDivisorType(ValueError):
    pass


class NotLiftable(ValueError):
    def __init__(self, entry, witness):
        self.entry = entry
        self.witness = witness
        super().__init__(
            "no polynomial lift: entry (%d, %d) is %s" % (entry[0] + 1, entry[1] + 1, witness)
        )


class ConventionCheckFailed(AssertionError):
    pass


class PoissonStruct:
    """A bivector with its cached jacobiator."""

    __slots__ = ("pi", "jacobiator", "label", "advertised_frame", "advertised_class")

    def __init__(self, pi, label=None):
        if pi.degree != 2:
            raise DegreeMismatch("a Poisson structure is a bivector")
        self.pi = pi
        self.jacobiator = schouten_bracket(pi, pi)
        self.label = label
        self.advertised_frame = None
        self.advertised_class = None

    @property
    def is_poisson(self):
        return self.jacobiator.is_zero()

    def __str__(self):
        return str(self.pi)


def check_poisson(pi):
    """(ok, jacobiator) -- exact zero test of [pi, pi]."""
    if isinstance(pi, PoissonStruct):
        return pi.is_poisson, pi.jacobiator
    if pi.degree != 2:
        raise DegreeMismatch("check_poisson expects a bivector")
    jac = schouten_bracket(pi, pi)
    return jac.is_zero(), jac


# ---------------------------------------------------------------------------
# Degeneracy ideals and divisor type
# ---------------------------------------------------------------------------


class DegeneracyLevel:
    __slots__ = ("k", "generators", "principal", "generator")

    def __init__(self, k, generators):
        self.k = k
        self.generators = generators
        self.principal = False
        self.generator = None
        nonzero = [g for g in generators if not g.is_zero()]
        if not nonzero:
            return
        if any(g.is_constant() for g in nonzero):
            self.principal = True
            self.generator = Poly.const(nonzero[0].chart, 1)
            return
        norms = [g.unit_normalized() for g in nonzero]
        if all(g == norms[0] for g in norms):
            self.principal = True
            self.generator = norms[0]


def degeneracy_ideals(pi):
    """Per k, the component list of pi^k/k! (generators of the 2k-th
    degeneracy ideal), flagged when they reduce to a principal generator.

    Beyond the principal case these lists are generator data only; ideal
    membership for several generators is out of scope.
    """
    if pi.degree != 2:
        raise DegreeMismatch("expected a bivector")
    out = []
    for k in range(1, pi.chart.dimension // 2 + 1):
        pf = partial_pfaffian(pi, k)
        gens = [pf.comps[idx] for idx in sorted(pf.comps)]
        out.append(DegeneracyLevel(k, gens))
    return out


class DivisorTypeReport:
    __slots__ = ("m", "ideal", "line_part", "certificate", "sample_points", "divisor_class", "warnings")

    def __init__(self, m, ideal, line_part, certificate, sample_points, divisor_class, warnings):
        self.m = m
        self.ideal = ideal
        self.line_part = line_part
        self.certificate = certificate
        self.sample_points = sample_points
        self.divisor_class = divisor_class
        self.warnings = warnings


def sample_grid(chart, values=None, cap=True):
    """Deterministic rational sample grid: coordinates from `values`.

    With `cap` the enumeration stops after 3^n points (diagonal-shifted so
    every coordinate still sweeps all values); without it the full product
    is returned."""
    values = tuple(values) if values is not None else DEFAULT_GRID_VALUES
    n = chart.dimension
    if not cap:
        return [tuple(Fraction(v) for v in t) for t in itertools.product(values, repeat=n)]
    pts = []
    limit = 3**n
    for t, tup in enumerate(itertools.product(values, repeat=n)):
        if t >= limit:
            break
        shifted = tuple(values[(values.index(v) + t) % len(values)] for v in tup)
        pts.append(tuple(Fraction(v) for v in shifted))
    return pts


def divisor_type(pi, grid_values=None):
    """Largest m with pi^m != 0, the extracted divisor ideal, and the line
    part W with pi^m/m! = g*W.  The line condition is exact when W has
    constant components, otherwise certified on a deterministic sample grid
    and flagged as heuristic."""
    if isinstance(pi, PoissonStruct):
        ps = pi
        pi = ps.pi
    else:
        ps = None
    if pi.degree != 2:
        raise DegreeMismatch("expected a bivector")
    warnings = []
    ok, _ = check_poisson(pi)
    if not ok:
        warnings.append("bivector is not Poisson: divisor data only")
    chart = pi.chart
    m = 0
    pf = None
    for k in range(chart.dimension // 2, -1, -1):
        cand = partial_pfaffian(pi, k)
        if not cand.is_zero():
            m = k
            pf = cand
            break
    if m == 0:
        ideal = make_ideal(Poly.const(chart, 1))
        cls = classify(ideal)
        return DivisorTypeReport(0, ideal, Multivector.function(Poly.const(chart, 1)),
                                 "constant", [], cls, warnings)
    comps = [pf.comps[idx] for idx in sorted(pf.comps)]
    g = gcd_content(comps)
    line = {}
    for idx, c in pf.comps.items():
        q = exact_divide(c, g)
        assert q is not None
        line[idx] = q
    w = Multivector(chart, 2 * m, line)
    ideal = make_ideal(g)
    cls = classify(ideal)
    if all(c.is_constant() for c in w.comps.values()):
        cert = "constant"
        points = []
    else:
        cert = "sampled"
        points = sample_grid(chart, grid_values)
        for p in points:
            if all(c.evaluate(p) == 0 for c in w.comps.values()):
                raise NotDivisorType(
                    "line section vanishes at sample point %s" % (tuple(map(str, p)),)
                )
        warnings.append("line-subbundle certificate is sampled, not exact")
    return DivisorTypeReport(m, ideal, w, cert, points, cls, warnings)


# ---------------------------------------------------------------------------
# Lifting through anchor frames
# ---------------------------------------------------------------------------


class LiftCertificate:
    __slots__ = ("frame", "lifted", "residual_ideal", "nondegenerate", "evidence", "warnings")

    def __init__(self, frame, lifted, residual_ideal, nondegenerate, evidence, warnings):
        self.frame = frame
        self.lifted = lifted  # Multivector whose indices refer to frame generators
        self.residual_ideal = residual_ideal
        self.nondegenerate = nondegenerate
        self.evidence = evidence
        self.warnings = warnings

    def pushforward(self):
        return pushforward(self.frame, self.lifted.comps, 2)

    def lifted_pfaffian(self):
        n = self.frame.chart.dimension
        if n % 2:
            return None
        pf = partial_pfaffian(self.lifted, n // 2)
        return pf.comps.get(tuple(range(n)), Poly.zero(self.frame.chart))


def lift(pi, frame, grid_values=None):
    """Solve pi = rho pi_A rho^T exactly; liftable iff every entry of
    adj(rho) Pi adj(rho)^T is divisible by det(rho)^2."""
    if isinstance(pi, PoissonStruct):
        pi = pi.pi
    if pi.chart != frame.chart:
        raise ChartMismatch("bivector and frame on different charts")
    if pi.degree != 2:
        raise DegreeMismatch("expected a bivector")
    chart = pi.chart
    n = chart.dimension
    adj = frame.adjugate()
    det2 = frame.det * frame.det
    m = mat_mul(mat_mul(adj, bivector_matrix(pi)), mat_transpose(adj))
    comps = {}
    for i in range(n):
        for j in range(i + 1, n):
            q = exact_divide(m[i][j], det2)
            if q is None:
                raise NotLiftable((i, j), Localized(m[i][j], 2, frame.det.unit_normalized()))
            if not q.is_zero():
                comps[(i, j)] = q
    lifted = Multivector(chart, 2, comps)
    cert = LiftCertificate(frame, lifted, None, False, "degenerate", [])
    back = cert.pushforward()
    if back != pi:  # pragma: no cover - solving is exact
        raise RuntimeError("lift pushforward does not reproduce the bivector")
    pf = cert.lifted_pfaffian()
    if pf is not None:
        if not pf.is_zero():
            cert.residual_ideal = make_ideal(pf)
        if pf.is_constant() and not pf.is_zero():
            cert.nondegenerate = True
            cert.evidence = "constant Pfaffian %s" % pf
        elif not pf.is_zero():
            # include 0 and take the full product: a Pfaffian zero at any
            # real point is an exact proof of degeneracy
            points = sample_grid(
                chart,
                grid_values if grid_values is not None else (-2, -1, 0, 1, 2),
                cap=False,
            )
            if all(pf.evaluate(p) != 0 for p in points):
                cert.nondegenerate = True
                cert.evidence = "Pfaffian nonvanishing on the sample grid"
                cert.warnings.append("nondegeneracy certificate is sampled, not exact")
            else:
                cert.evidence = "Pfaffian %s vanishes somewhere" % pf
        # exact multiplicativity check Pf(pi) = det * Pf(pi_A)
        top = partial_pfaffian(pi, n // 2).comps.get(tuple(range(n)), Poly.zero(chart))
        if top != frame.det * pf:  # pragma: no cover
            raise RuntimeError("Pfaffian multiplicativity violated (internal error)")
    return cert


# ---------------------------------------------------------------------------
# Hamiltonian, Poisson, and modular vector fields
# ---------------------------------------------------------------------------


def hamiltonian_vf(pi, f):
    """pi^#(df) with pi^#(alpha) = pi(alpha, .)."""
    if isinstance(pi, PoissonStruct):
        pi = pi.pi
    chart = pi.chart
    m = bivector_matrix(pi)
    coeffs = []
    for j in range(chart.dimension):
        s = Poly.zero(chart)
        for i in range(chart.dimension):
            if m[i][j].is_zero():
                continue
            df = f.diff(chart.variables[i])
            if df.is_zero():
                continue
            s = s + m[i][j] * df
        coeffs.append(s)
    return Multivector.vector(chart, coeffs)


def poisson_bracket(pi, f, g):
    """{f, g} = pi(df, dg)."""
    return hamiltonian_vf(pi, f).apply_to(g)


def poisson_vf_check(pi, v):
    """Exact zero test of L_v pi."""
    if isinstance(pi, PoissonStruct):
        pi = pi.pi
    return lie_derivative(v, pi).is_zero()


def _coordinate_volume(chart):
    from .multivector import DiffForm

    n = chart.dimension
    return DiffForm(chart, n, {tuple(range(n)): Poly.const(chart, 1)})


def modular_vf(pi, volume_factor=None):
    """Modular vector field for the coordinate volume (optionally rescaled
    by a positive rational constant, which leaves it unchanged).

    The sign convention is anchored to the plane example
    f*Dx^^Dy |-> (df/dx) Dy - (df/dy) Dx; the defining property
    L_{pi^#(df)} mu = -(L_V f) mu is re-verified for every coordinate
    function before returning.  For a non-constant polynomial volume factor
    see `modular_shift`.
    """
    if isinstance(pi, PoissonStruct):
        ps = pi
        pi = ps.pi
        if not ps.is_poisson:
            raise BadParams("modular field requires a Poisson bivector")
    else:
        ok, _ = check_poisson(pi)
        if not ok:
            raise BadParams("modular field requires a Poisson bivector")
    if volume_factor is not None:
        if isinstance(volume_factor, Poly):
            if not volume_factor.is_constant():
                raise BadParams(
                    "non-constant volume factors change the field by a fraction; "
                    "use modular_shift for the exact polynomial statement"
                )
            volume_factor = volume_factor.constant_value()
        if Fraction(volume_factor) <= 0:
            raise BadParams("volume factor must be positive")
    chart = pi.chart
    m = bivector_matrix(pi)
    coeffs = []
    for i in range(chart.dimension):
        s = Poly.zero(chart)
        for k in range(chart.dimension):
            if m[k][i].is_zero():
                continue
            s = s + m[k][i].diff(chart.variables[k])
        coeffs.append(s)
    v = Multivector.vector(chart, coeffs)
    mu = _coordinate_volume(chart)
    for i, var in enumerate(chart.variables):
        xf = hamiltonian_vf(pi, Poly.var(chart, var))
        lhs = lie_derivative(xf, mu)
        want = (-coeffs[i]) * mu
        if lhs != want:
            raise ConventionCheckFailed(
                "modular defining property failed for coordinate %s" % var
            )
    return v


def modular_shift(pi, g):
    """Polynomial shift datum for a volume rescaling mu -> g*mu: the modular
    field changes by W/g with W = pi^#(dg) in this engine's sharp convention
    (equal to minus the sharp of the opposite slot convention)."""
    if isinstance(pi, PoissonStruct):
        pi = pi.pi
    return hamiltonian_vf(pi, g)


# ---------------------------------------------------------------------------
# Modular-foliation report
# ---------------------------------------------------------------------------


class ModularFoliationReport:
    __slots__ = (
        "frame",
        "hamiltonian_expansions",
        "modular_field",
        "modular_expansion",
        "ideal_certificates",
        "failures",
    )

    def __init__(self):
        self.frame = None
        self.hamiltonian_expansions = {}
        self.modular_field = None
        self.modular_expansion = None
        self.ideal_certificates = []
        self.failures = []

    @property
    def passed(self):
        return not self.failures


def modular_foliation_report(pi, frame, lift_cert=None, grid_values=None):
    """Certify F_pi <= F_mod <= F_A for a lifted Poisson structure:
    coordinate Hamiltonian fields and the modular field must expand in the
    frame with polynomial coefficients, and the modular field must preserve
    every principal degeneracy ideal."""
    if isinstance(pi, PoissonStruct):
        pi = pi.pi
    if lift_cert is None:
        lift_cert = lift(pi, frame, grid_values)  # raises NotLiftable on bad input
    rep = ModularFoliationReport()
    rep.frame = frame
    chart = pi.chart
    for var in chart.variables:
        h = hamiltonian_vf(pi, Poly.var(chart, var))
        try:
            rep.hamiltonian_expansions[var] = expand_in_frame(h, frame)
        except NotInModule as e:
            rep.hamiltonian_expansions[var] = None
            rep.failures.append("hamiltonian field of %s not in frame: %s" % (var, e.witness))
    v = modular_vf(pi)
    rep.modular_field = v
    try:
        rep.modular_expansion = expand_in_frame(v, frame)
    except NotInModule as e:
        rep.failures.append("modular field not in frame: %s" % e.witness)
    for level in degeneracy_ideals(pi):
        if not level.principal or level.generator is None:
            continue
        ideal = make_ideal(level.generator)
        ok, cert = preserves(v, ideal)
        rep.ideal_certificates.append((2 * level.k, ideal, ok, cert))
        if not ok:
            rep.failures.append("modular field does not preserve %s" % ideal)
    return rep


# ---------------------------------------------------------------------------
# Darboux model catalog
# ---------------------------------------------------------------------------


def invert_antisym(chart, m):
    """Exact inverse of an antisymmetric Poly matrix with constant nonzero
    determinant (all the catalog dual forms have one)."""
    from .frames import poly_adjugate, poly_det

    det = poly_det(m)
    if not det.is_constant() or det.is_zero():
        raise BadParams("matrix inversion needs a constant nonzero determinant")
    c = det.constant_value()
    adj = poly_adjugate(m)
    return [[adj[i][j] * (1 / c) for j in range(len(m))] for i in range(len(m))]


def _omega_pairs(chart, slots):
    """Standard symplectic bivector sum over consecutive slot pairs."""
    out = Multivector.zero(chart, 2)
    for a, b in zip(slots[::2], slots[1::2]):
        out = out + Multivector(chart, 2, {(a, b): Poly.const(chart, 1)})
    return out


def darboux_catalog(kind, dim, k=None, lam=None):
    """Local Darboux models, in Cartesian coordinates, as PoissonStructs.

    kinds: log | bk (power k) | scattering | elliptic (parameter lam != 0)
           | elliptic_zero.  The Poisson identity is asserted at
    construction; each model advertises its frame and divisor class.
    """
    if dim < 2 or dim % 2:
        raise BadParams("Darboux models live on even-dimensional charts")
    if kind in ("log", "bk", "scattering"):
        chart = Chart(["z"] + ["x%d" % i for i in range(1, dim)])
        z = Poly.var(chart, "z")
        if kind == "log":
            k = 1
        if kind in ("log", "bk"):
            if not isinstance(k, int) or k < 1:
                raise BadParams("bk model needs an integer power k >= 1")
            pi = (z**k) * Multivector(chart, 2, {(0, 1): Poly.const(chart, 1)})
            pi = pi + _omega_pairs(chart, list(range(2, dim)))
            frame = catalog("log", chart, "z") if k == 1 else catalog("bk", chart, "z", k)
            cls = (
                DivisorClass(DivisorClass.LOG)
                if k == 1
                else DivisorClass(DivisorClass.BPOWER, k)
            )
        else:
            frame = catalog("scattering", chart, "z")
            # closed nondegenerate scattering form with contact one-form
            # dx1 + x2 dx3 + x4 dx5 + ...; invert exactly and push forward.
            n = dim
            w = [[Poly.zero(chart) for _ in range(n)] for _ in range(n)]

            def setw(i, j, val):
                w[i][j] = val
                w[j][i] = -val

            setw(0, 1, Poly.const(chart, 1))
            for a in range(2, n, 2):
                setw(0, a + 1, Poly.var(chart, "x%d" % a))
                setw(a, a + 1, Poly.const(chart, Fraction(-1, 2)))
            p = invert_antisym(chart, w)
            pa = bivector_from_matrix(chart, [[-e for e in row] for row in p])
            pi = pushforward(frame, pa.comps, 2)
            cls = DivisorClass(DivisorClass.BPOWER, dim + 1)
    elif kind in ("elliptic", "elliptic_zero"):
        chart = Chart(["x", "y"] + ["x%d" % i for i in range(1, dim - 1)])
        x, y = Poly.var(chart, "x"), Poly.var(chart, "y")
        frame = catalog("elliptic", chart, "x", "y")
        if kind == "elliptic":
            lam = Fraction(1) if lam is None else Fraction(lam)
            if lam == 0:
                raise BadParams("elliptic model needs a nonzero residue parameter")
            pi = (lam * (x * x + y * y)) * Multivector(
                chart, 2, {(0, 1): Poly.const(chart, 1)}
            )
            pi = pi + _omega_pairs(chart, list(range(2, dim)))
        else:
            if dim < 4:
                raise BadParams("the zero-residue elliptic model needs dimension >= 4")
            euler = x * Multivector.basis_vector(chart, 0) + y * Multivector.basis_vector(chart, 1)
            rot = x * Multivector.basis_vector(chart, 1) - y * Multivector.basis_vector(chart, 0)
            pi = euler.wedge(Multivector.basis_vector(chart, 2))
            pi = pi + rot.wedge(Multivector.basis_vector(chart, 3))
            pi = pi + _omega_pairs(chart, list(range(4, dim)))
        cls = DivisorClass(DivisorClass.ELLIPTIC)
    else:
        raise BadParams("unknown Darboux model %r" % (kind,))
    ps = PoissonStruct(pi, label=(kind, dim, k, str(lam) if lam is not None else None))
    if not ps.is_poisson:  # pragma: no cover - models are Poisson by construction
        raise RuntimeError("catalog model failed the Poisson check")
    ps.advertised_frame = frame
    ps.advertised_class = cls
    return ps

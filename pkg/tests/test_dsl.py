from fractions import Fraction

import pytest

from divkit.rings import Chart, Poly
from divkit.multivector import DiffForm, Multivector
from divkit.divisors import DivisorIdeal
from divkit.frames import AnchorFrame
from divkit.dsl import CoframeExpr, ParseError, format_job, parse, parse_expression


def test_parse_minimal_job():
    job = parse("chart x,y; pi = x*Dx^^Dy; check_poisson pi;")
    assert job.chart.variables == ("x", "y")
    assert job.command[0] == "check_poisson"
    pi = job.command[1]
    assert isinstance(pi, Multivector) and pi.degree == 2
    assert str(pi) == "x*Dx^^Dy"


def test_parse_divisor_job():
    job = parse(
        "chart x, y, z, w;\npi = x*Dx^^Dy + Dz^^Dw + Dx^^Dw;\ndivisor pi;\n"
    )
    assert job.command[0] == "divisor"
    assert str(job.command[1]) == "x*Dx^^Dy + Dx^^Dw + Dz^^Dw"


def test_unknown_name_has_position():
    with pytest.raises(ParseError) as e:
        parse("chart x,y; pi = q*Dx^^Dy; check_poisson pi;")
    assert e.value.line == 1 and e.value.col == 17
    assert "unknown name 'q'" in str(e.value)


def test_parse_errors():
    with pytest.raises(ParseError):
        parse("chart x,y; check_poisson;")  # missing operand
    with pytest.raises(ParseError):
        parse("pi = x*Dx^^Dy;")  # no chart
    with pytest.raises(ParseError):
        parse("chart x,y; pi = x*Dx^^Dy; check_poisson pi; divisor pi;")  # two commands
    with pytest.raises(ParseError):
        parse("chart x, x; check_poisson Dx^^Dy;")  # duplicate variable
    with pytest.raises(ParseError):
        parse("chart e1, y; check_poisson De1^^Dy;")  # reserved name
    with pytest.raises(ParseError):
        parse("chart x,y; w = e9; residue w via log on frame log(x);")  # bad index


def test_frames_and_ideals():
    job = parse(
        """
        chart x, y;
        F = frame elliptic_log(x, y);
        I = ideal(x*(x^2 + y^2));
        verify_frame F by I;
        """
    )
    assert isinstance(job.definitions["F"], AnchorFrame)
    assert isinstance(job.definitions["I"], DivisorIdeal)
    assert str(job.definitions["I"].generator) == "x^3 + x*y^2"


def test_custom_frame():
    job = parse(
        "chart x, y, z; F = frame custom(Dx + 2*x*Dz; Dy; (z - x^2)*Dz);"
        " verify_frame F by ideal(z - x^2);"
    )
    f = job.definitions["F"]
    assert [str(g) for g in f.generators] == ["Dx + 2*x*Dz", "Dy", "(-x^2 + z)*Dz"]


def test_rational_literals_and_power():
    job = parse("chart x,y; p = 3/2*x^2 - 1/2*y; classify p;")
    p = job.definitions["p"]
    assert p == Fraction(3, 2) * Poly.var(Chart(["x", "y"]), "x") ** 2 - Fraction(
        1, 2
    ) * Poly.var(Chart(["x", "y"]), "y")


def test_print_then_parse_polys(rng):
    from conftest import rand_poly

    chart = Chart(["x", "y", "z"])
    for _ in range(40):
        p = rand_poly(chart, rng, max_degree=4, terms=5)
        q = parse_expression(str(p), chart)
        if isinstance(q, (int, Fraction)):
            q = Poly.const(chart, q)
        assert q == p, str(p)


def test_print_then_parse_multivectors(rng):
    from conftest import rand_multivector

    chart = Chart(["x", "y", "z"])
    for deg in (1, 2, 3):
        for _ in range(15):
            m = rand_multivector(chart, rng, deg)
            if m.is_zero():
                continue
            q = parse_expression(str(m), chart)
            assert q == m, str(m)


def test_print_then_parse_forms(rng):
    from conftest import rand_poly

    chart = Chart(["x", "y", "z"])
    import itertools

    for deg in (1, 2):
        for _ in range(10):
            comps = {
                idx: rand_poly(chart, rng) for idx in itertools.combinations(range(3), deg)
            }
            w = DiffForm(chart, deg, comps)
            if w.is_zero():
                continue
            assert parse_expression(str(w), chart) == w
            ce = CoframeExpr(chart, deg, comps)
            if ce.is_zero():
                continue
            got = parse_expression(str(ce), chart)
            assert isinstance(got, CoframeExpr) and got.comps == ce.comps


def test_format_job_idempotent():
    src = """
    chart x , y ;
    pi   =  x^2*Dx^^Dy ;
    lift pi to frame log( x );
    """
    job = parse(src)
    once = format_job(job)
    twice = format_job(parse(once))
    assert once == twice
    assert "lift pi to frame log(x);" in once


def test_format_job_inlines_values():
    job = parse("chart x,y; modular x*Dx^^Dy;")
    out = format_job(job)
    assert out == "chart x, y;\nmodular x*Dx^^Dy;\n"

import random
import sys
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import pytest

from divkit.rings import Poly
from divkit.multivector import Multivector


def rand_poly(chart, rng, max_degree=2, terms=3, zero_ok=True):
    p = Poly.zero(chart)
    for _ in range(terms):
        e = [0] * chart.dimension
        for _ in range(rng.randint(0, max_degree)):
            e[rng.randrange(chart.dimension)] += 1
        p = p + Poly(chart, {tuple(e): Fraction(rng.randint(-3, 3))})
    if not zero_ok and p.is_zero():
        return Poly.const(chart, rng.randint(1, 3))
    return p


def rand_vector(chart, rng, max_degree=2):
    return Multivector.vector(
        chart, [rand_poly(chart, rng, max_degree) for _ in range(chart.dimension)]
    )


def rand_multivector(chart, rng, degree, max_degree=2, density=0.7):
    import itertools

    comps = {}
    for idx in itertools.combinations(range(chart.dimension), degree):
        if rng.random() < density:
            comps[idx] = rand_poly(chart, rng, max_degree)
    return Multivector(chart, degree, comps)


@pytest.fixture
def rng():
    return random.Random(20260811)


ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line("  " + line)

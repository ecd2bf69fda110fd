import random
from fractions import Fraction

import pytest

from regcoord.polycore import ComplexPoly, GaussRat, make_system, normalize


def random_poly(rng: random.Random, nvars: int, s: int, max_deg: int = 3, nterms: int = 4,
                pure: int | None = None) -> ComplexPoly:
    """Random polynomial in z_1..z_s with f(0) = 0 and a pure z_s power of degree ``pure``."""
    terms = {}
    for _ in range(nterms):
        e = [0] * nvars
        for i in range(s):
            e[i] = rng.randint(0, max_deg)
        if sum(e) == 0:
            e[rng.randrange(s)] = 1
        c = GaussRat(Fraction(rng.randint(-4, 4), rng.randint(1, 3)),
                     Fraction(rng.randint(-4, 4), rng.randint(1, 3)))
        terms[tuple(e)] = c
    if pure is not None:
        # drop lower pure powers so that m_s == pure
        terms = {e: c for e, c in terms.items()
                 if not (sum(e) == e[s - 1] and e[s - 1] < pure)}
        e = [0] * nvars
        e[s - 1] = pure
        terms[tuple(e)] = GaussRat(Fraction(rng.choice([2, 3, -2, 5, 4])), Fraction(rng.randint(-1, 1)))
    return ComplexPoly(nvars, terms)


def random_system(rng: random.Random, ms, U_radius: float = 1.0, nterms: int = 3):
    n = len(ms)
    fs = [random_poly(rng, n, s, max_deg=max(ms) + 1, nterms=nterms, pure=m)
          for s, m in enumerate(ms, start=1)]
    return normalize(make_system(fs, U_radius=U_radius))


@pytest.fixture
def rng():
    return random.Random(20240611)


def random_point(rng: random.Random, n: int, radius: float) -> tuple[Fraction, ...]:
    """Gaussian-rational point with every coordinate of modulus at most ``radius``/2."""
    r = Fraction(radius) / 2
    out = []
    for _ in range(n):
        x, y = Fraction(rng.randint(-7, 7), 10), Fraction(rng.randint(-7, 7), 10)
        out.append(GaussRat(x * r, y * r))
    return tuple(out)


def strict_corpus(count: int, seed: int, max_n: int = 3, max_m: int = 3):
    """Random normalized systems with a strict-mode delta: (sys, ledger, expansion, log_delta)."""
    from regcoord.approx import fit_neighborhood, ledger, local_expansion

    rng = random.Random(seed)
    out = []
    while len(out) < count:
        n = rng.randint(1, max_n)
        ms = [rng.randint(1, max_m) for _ in range(n)]
        sys = fit_neighborhood(random_system(rng, ms))
        led = ledger(sys, rng.choice([2.0, 8.0, 100.0]), with_globals=False)
        exp = local_expansion(sys, random_point(rng, n, sys.U_radius))
        log_delta = led.log_delta_tilde - rng.uniform(0.0, 30.0)
        out.append((sys, led, exp, log_delta))
    return out

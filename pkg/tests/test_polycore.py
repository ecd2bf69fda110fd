import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from regcoord.polycore import (
    GaussRat, InvalidInputError, NotRegularError, ParseError,
    contact_order, epsilon_prediction, expand_system, format_curve, format_polynomial,
    format_system, make_system, multiplicities, normalize, parse_curve, parse_polynomial,
    parse_system, rotate_curve, taylor_shift,
)
from conftest import random_poly

F = Fraction


def test_shift_square_at_one():
    e = taylor_shift(parse_polynomial("z1^2", 1), (1,))
    assert e.b(1) == {1: 2, 2: 1}
    assert e.c(1) == {}
    assert e.constant == (1,)


def test_shift_at_origin_is_identity():
    f = parse_polynomial("3z1^2 - z1 z2 + (1+i) z2^4", 2)
    e = taylor_shift(f, (0, 0))
    assert e.reconstruct(2) == dict(f.terms)


def test_shift_frozen_example():
    # (u2)^2 - (u1 + 1/2) recentred at (1/2, 0): u2^2 - u1, constant -1/2
    e = taylor_shift(parse_polynomial("z2^2 - z1", 2), (F(1, 2), 0))
    assert e.b(2) == {2: 1}
    assert e.c(2) == {(1, 0): -1}
    assert e.constant == (F(-1, 2),)


def test_shift_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        taylor_shift(parse_polynomial("z1", 1), (0, 0))


def test_shift_reconstruction_random():
    rng = random.Random(7)
    for _ in range(100):
        n = rng.randint(1, 3)
        f = random_poly(rng, n, n, max_deg=4, nterms=5)
        p = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(n)]
        u = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(n)]
        e = taylor_shift(f, p)
        lhs = sum(v * math.prod(x**k for x, k in zip(u, a)) for a, v in e.reconstruct(n).items())
        lhs += e.constant[0]
        rhs = f.evaluate([a + b for a, b in zip(p, u)])
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_shift_exact_at_rational_point():
    f = parse_polynomial("(2-i) z1^3 z2 + z2^2 - 5 z1", 2)
    p = (F(1, 3), GaussRat(F(1, 2), F(-1, 5)))
    e = taylor_shift(f, p)
    assert all(isinstance(v, GaussRat) for v in e.reconstruct(2).values())
    u = (GaussRat(F(2, 7)), GaussRat(F(-1, 3), F(1, 4)))
    lhs = e.constant[0]
    for a, v in e.reconstruct(2).items():
        lhs = lhs + v * u[0] ** a[0] * u[1] ** a[1]
    assert lhs == f.evaluate([GaussRat.of(p[0]) + u[0], p[1] + u[1]])


def test_mixed_terms_membership():
    sys = parse_system("2 z1 + z1^2\n2z2^2 - z1 z2 + 3 z1^2 z2^3\n")
    e = expand_system(sys, (0.3 + 0.1j, -0.2j))
    for s in (1, 2):
        for a in e.c(s):
            assert sum(a[: s - 1]) >= 1 and not any(a[s:])


def test_evaluation_order_independent():
    rng = random.Random(3)
    f = random_poly(rng, 3, 3, max_deg=5, nterms=12)
    pt = [0.7 - 0.2j, -0.4 + 0.9j, 0.33j]
    order = list(f.terms)
    base = f.evaluate(pt)
    for _ in range(10):
        rng.shuffle(order)
        assert abs(f.evaluate(pt, order) - base) <= 1e-12 * abs(base)


def test_no_zero_coefficients():
    f = parse_polynomial("z1 - z1 + z2", 2)
    assert list(f.terms) == [(0, 1)]


def test_multiplicities():
    assert multiplicities(parse_system("z1^2\nz2^3 - z1")) == (2, 3)
    assert multiplicities(parse_system("z1")) == (1,)
    with pytest.raises(NotRegularError) as err:
        parse_system("z1^2\nz1 z2")
    assert err.value.s == 2


def test_triangularity_enforced():
    with pytest.raises(InvalidInputError):
        parse_system("z1 + z2\nz2")
    with pytest.raises(InvalidInputError):
        parse_system("z1 + 1")


def test_epsilon_prediction():
    eps, mI = epsilon_prediction(parse_system("z1^2\nz2^3 - z1"))
    assert (eps, mI) == (F(1, 12), 6)
    assert epsilon_prediction(parse_system("z1\nz2\nz3")).epsilon == F(1, 2)
    assert epsilon_prediction(parse_system("z1^2\nz2^2\nz3^2")).epsilon == F(1, 16)
    big = parse_system("\n".join(f"z{i}^97" for i in range(1, 13)))
    eps, mI = epsilon_prediction(big)
    assert mI == 97**12 and eps * 2 * mI == 1


def test_contact_order_sharp_curve():
    sys = parse_system("z1^2\nz2^3 - z1")
    assert contact_order(sys, parse_curve("w^3\nw\n0", 2)) == 12


def test_contact_order_small_cases():
    assert contact_order(parse_system("z1"), parse_curve("w\n0")) == 2
    assert contact_order(parse_system("z1"), parse_curve("0\n0")) == math.inf
    # the linear term in z_{n+1} dominates
    assert contact_order(parse_system("z1^2"), parse_curve("w\nw")) == 1


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0, max_value=2 * math.pi))
def test_contact_order_rotation_invariant(theta):
    sys = parse_system("z1^2\nz2^3 - z1 + z1 z2")
    curve = parse_curve("w^3 + 2w^4\nw - w^2\ni w^7")
    assert contact_order(sys, rotate_curve(curve, theta)) == contact_order(sys, curve)


def test_curve_must_pass_origin():
    with pytest.raises(InvalidInputError):
        parse_curve("w + 1\n0")


def test_normalize_examples():
    s = normalize(parse_system("z1^2"))
    assert s.normalization_scale == 2 and s.fs[0].coefficient((2,)) == 2
    s = normalize(parse_system("3z1^2"))
    assert s.normalization_scale == 1
    s = normalize(parse_system("0.001 z1 + 2z1^2"))
    assert s.normalization_scale == 2000 and abs(s.fs[0].coefficient((1,))) == 2


def test_normalize_irrational_root():
    s = normalize(parse_system("(1+i) z1"))
    b = s.fs[0].coefficient((1,))
    assert b.abs2() >= 4
    again = normalize(s)
    assert again.normalization_scale == s.normalization_scale


def test_normalize_idempotent_random(rng):
    for _ in range(30):
        n = rng.randint(1, 3)
        fs = [random_poly(rng, n, s, nterms=3, pure=rng.randint(1, 3)) for s in range(1, n + 1)]
        fs = [f.scale(F(1, rng.randint(1, 50))) for f in fs]
        once = normalize(make_system(fs))
        twice = normalize(once)
        assert twice.normalization_scale == once.normalization_scale
        assert twice.fs == once.fs


def test_parse_grammar_variants():
    f = parse_polynomial("2i*z1^2 + i z2 - (1/2 - 3i) z1**3 z2 + 1.5e1 z1", 2)
    assert f.coefficient((2, 0)) == GaussRat(F(0), F(2))
    assert f.coefficient((0, 1)) == GaussRat(F(0), F(1))
    assert f.coefficient((3, 1)) == GaussRat(F(-1, 2), F(3))
    assert f.coefficient((1, 0)) == 15
    assert parse_polynomial("(z1 + z2)^2", 2) == parse_polynomial("z1^2 + 2 z1 z2 + z2^2", 2)


def test_parse_comments_and_blanks():
    sys = parse_system("# demo\n\n2 z1   # first\n\n2z2^2 - z1\n")
    assert sys.n == 2 and sys.ms == (1, 2)


@pytest.mark.parametrize("text,line,col", [
    ("z1 +", 1, 5),
    ("z1\nz2 ^ x", 2, 6),
    ("z1\nz3", 2, 1),
    ("3/0 z1", 1, 3),
    ("z1 )", 1, 4),
])
def test_parse_errors_have_positions(text, line, col):
    with pytest.raises(ParseError) as err:
        parse_system(text)
    assert (err.value.line, err.value.column) == (line, col)


def test_empty_input_is_parse_error():
    with pytest.raises(ParseError):
        parse_system("# nothing here\n\n")


def test_round_trip_random(rng):
    for _ in range(50):
        n = rng.randint(1, 4)
        f = random_poly(rng, n, n, max_deg=4, nterms=6)
        assert parse_polynomial(format_polynomial(f), n) == f
    sys = parse_system("2 z1\n(2+i) z2^2 - 1/3 z1 z2")
    assert parse_system(format_system(sys)).fs == sys.fs
    curve = parse_curve("w^3\n-i w\n2/5 w^2")
    assert parse_curve(format_curve(curve)).components == curve.components

"""Acceptance criteria 1-9, one PASS/FAIL line each with its runtime."""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from regcoord.approx import ledger, local_expansion, scaling_check, signature_bound, signature_violations, tau, type_signature
from regcoord.cover import (
    analyze_point, epsilon_certificate, grid_points, greedy_cover, origin_half_widths, stratify,
)
from regcoord.polycore import contact_order, epsilon_prediction, parse_curve, parse_system
from regcoord.psh import build_weights, derivative_windows, fd_complex_hessian, polydisc_samples, verify_hessian_G, verify_hessian_g
from conftest import strict_corpus
from test_approx import oracle_tau

F = Fraction
DEMO = "2 z1\n2 z2^2 - z1"


@pytest.fixture
def line(capsys):
    def emit(k, name, ok, t0, limit, detail=""):
        dt = time.perf_counter() - t0
        status = "PASS" if ok and dt < limit else "FAIL"
        with capsys.disabled():
            print(f"\n[acceptance {k}] {status} {name} ({dt:.2f}s, limit {limit:g}s) {detail}".rstrip())
        assert ok, detail
        assert dt < limit, f"took {dt:.2f}s"
    return emit


def prefix(ms):
    out, acc = [], 1
    for m in ms:
        acc *= m
        out.append(acc)
    return out


@pytest.fixture(scope="module")
def corpus():
    return strict_corpus(100, 2024)


@pytest.fixture(scope="module")
def demo():
    sys = parse_system(DEMO, U_radius=F(1, 2))
    led = ledger(sys, 8)
    exp = local_expansion(sys, (0, 0))
    ap = tau(exp, sys, led, delta=1e-8, strict=False)
    win = derivative_windows(exp, ap, led)
    return sys, led, exp, ap, win


def test_1_sharpness(line):
    t0 = time.perf_counter()
    sys = parse_system("z1^2\nz2^3 - z1")
    curve = parse_curve("w^3\nw\n0", 2)
    T = contact_order(sys, curve)
    eps = epsilon_prediction(sys).epsilon
    ok = T == 12 and isinstance(T, int) and eps == F(1, 12)
    line(1, "sharpness example", ok, t0, 1, f"T={T} epsilon={eps}")


def test_2_bound_chain(line, corpus):
    t0 = time.perf_counter()
    worst = math.inf
    for sys, led, exp, ld in corpus:
        ap = tau(exp, sys, led, log_delta=ld)
        P = prefix(sys.ms)
        for s in range(sys.n):
            lo = ap.log_tau[s] - (ld / 2 - led.log_B[s])
            hi = led.log_M[s] + ld / (2 * P[s]) - ap.log_tau[s]
            worst = min(worst, lo, hi)
    line(2, "tau bound chain on 100 systems", worst >= -1e-9, t0, 30, f"min slack {worst:.3g}")


def test_3_scaling(line, corpus):
    t0 = time.perf_counter()
    worst = math.inf
    for sys, led, exp, ld in corpus:
        for a in (0.5, 0.1):
            worst = min(worst, min(scaling_check(exp, sys, led, led.log_mu, ld, a).margins))
    line(3, "scaling law, a in {1/2, 1/10}", worst >= -1e-9, t0, 30, f"min margin {worst:.3g}")


def test_4_type_finiteness(line, corpus):
    t0 = time.perf_counter()
    bad = []
    for sys, led, exp, ld in corpus:
        bad += signature_violations(tau(exp, sys, led, log_delta=ld), sys.ms)
    sys = parse_system(DEMO, U_radius=F(1, 2))
    led = ledger(sys, 8)
    ld = led.log_delta_tilde - 1
    r0 = analyze_point(sys, led, (0, 0), led.log_mu, ld, True)
    seen = set()
    for p in grid_points(2, origin_half_widths(r0), 20):
        r = analyze_point(sys, led, p, led.log_mu, ld, True)
        bad += signature_violations(r.approx, sys.ms)
        seen.add(type_signature(r.approx))
    bound = signature_bound(sys.ms)
    line(4, "type finiteness", not bad and len(seen) <= bound, t0, 60,
         f"{len(seen)} signatures on 20x20 grid, bound {bound}, violations {len(bad)}")


def test_5_oracle(line):
    t0 = time.perf_counter()
    worst = 0.0
    cases = strict_corpus(50, 77, max_n=2, max_m=3)
    for sys, led, exp, ld in cases:
        ap = tau(exp, sys, led, log_delta=ld)
        for x, y in zip(ap.log_tau, oracle_tau(exp, sys.n, led.log_mu, ld)):
            worst = max(worst, abs(x - y) / abs(y))
    line(5, "crossing vs bisection on 50 instances", worst <= 1e-9 and len(cases) == 50, t0, 30,
         f"max rel diff {worst:.2e}")


def test_6_hessian_G(line, demo):
    t0 = time.perf_counter()
    _, led, exp, ap, win = demo
    G, _, _ = build_weights(exp, ap, win, led.glob.eta)
    rep = verify_hessian_G(G, 1000, seed=0)
    u, _ = polydisc_samples(G.radii, 100, 99)
    fd = 0.0
    for z in u:
        H = G.hessian(z)
        fd = max(fd, float(np.max(np.abs(fd_complex_hessian(G.gradient, z, 1e-5 * G.radii) - H)) / np.max(np.abs(H))))
    ok = rep.passed and rep.sample_count == 1000 and fd < 1e-6
    line(6, "Hessian of G on R(p:a), m=(1,2), delta=1e-8", ok, t0, 120,
         f"min margin {rep.min_margin:.3g}, fd rel {fd:.2e}")


def test_7_g_properties(line, demo):
    t0 = time.perf_counter()
    _, led, exp, ap, win = demo
    _, _, g = build_weights(exp, ap, win, led.glob.eta)
    reps = verify_hessian_g(g, [math.exp(w.log_a_s) for w in win], 1000, seed=0)
    ok = all(r.passed and r.sample_count == 1000 for r in reps.values())
    detail = ", ".join(f"{k} {r.min_margin:.3g}" for k, r in reps.items())
    line(7, "g range, support, psh and strip floor", ok, t0, 120, detail)


def test_8_cover(line):
    t0 = time.perf_counter()
    sys = parse_system(DEMO, U_radius=F(1, 2))
    led = ledger(sys, 8)
    lm, ld = math.log(8), math.log(1e-8)
    r0 = analyze_point(sys, led, (0, 0), lm, ld, False)
    recs = [analyze_point(sys, led, p, lm, ld, False) for p in grid_points(2, origin_half_widths(r0), 50)]
    covers = [greedy_cover(s) for s in stratify(recs)]
    ok = all(c.covered_fraction == 1.0 and c.max_overlap <= c.overlap_bound for c in covers)
    detail = "; ".join(f"{c.member_count} members, {len(c.centers)} centres, overlap {c.max_overlap} <= {c.overlap_bound:.3g}"
                       for c in covers)
    line(8, "greedy cover on 50x50 grid", ok, t0, 120, detail)


SLOPE_SYSTEMS = {
    "2z1^2": "2 z1^2",
    "2z1^3": "2 z1^3",
    "2z1, 2z2^3": "2 z1\n2 z2^3",
    "2z1, 2z2, 2z3^2": "2 z1\n2 z2\n2 z3^2",
    "chain z1^2, z2^3 - z1": "z1^2\nz2^3 - z1",
}


def test_9_certificate(line):
    t0 = time.perf_counter()
    parts, ok = [], True
    for name, text in SLOPE_SYSTEMS.items():
        sys = parse_system(text, U_radius=F(1, 8))
        lds = [math.log(1e-12) - 2 * k for k in range(6)]
        cert = epsilon_certificate(sys, None, lds, math.log(8))
        ok &= cert.slope_matches and len(cert.log_deltas) == 6
        parts.append(f"{name}: {cert.slope:.6f} vs {float(cert.epsilon):.6f}")
    line(9, "certificate slope over a 6-rung ladder", ok, t0, 60, "; ".join(parts))


@pytest.mark.xfail(strict=True, reason="for pure powers the largest tau has slope 1/(2 max m_s), "
                   "which equals 1/(2 m_1...m_n) only when all other m_s are 1")
def test_9_literal_pure_powers_2_3():
    sys = parse_system("2 z1^2\n2 z2^3", U_radius=F(1, 8))
    cert = epsilon_certificate(sys, None, [math.log(1e-12) - 2 * k for k in range(6)], math.log(8))
    assert cert.slope == pytest.approx(1 / 6, abs=1e-9)
    assert cert.slope_matches

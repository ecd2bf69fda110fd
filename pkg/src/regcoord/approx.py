"""Approximate systems tau_s(p, mu, delta), type signatures and the threshold ledger.

Every scale is handled as a natural logarithm: strict thresholds are far below
the smallest positive double, so ``delta`` itself is never formed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Sequence

from .polycore import (
    GaussRat, InvalidInputError, LocalExpansion, TriangularSystem, expand_system,
)

__all__ = [
    "LocalExpansion", "CoefficientBounds", "ConstantsLedger", "ApproxSystem", "TypeSignature",
    "InfeasibleScaleError", "DegenerateInputError", "coefficient_bounds", "pure_lower_bounds",
    "fit_neighborhood", "ledger", "local_expansion", "envelope_F", "envelope_C", "tau",
    "scaling_check", "type_signature", "stability_check", "stability_constants",
    "signature_bound", "admissible_mixed", "weighted_sum",
]

LOG_HALF = math.log(0.5)


class InfeasibleScaleError(ValueError):
    """No radius in (0, 1) satisfies the envelope inequality (delta too large)."""


class DegenerateInputError(ValueError):
    pass


def log_abs(v) -> float:
    """log|v| for exact or float scalars; -inf for zero."""
    if isinstance(v, GaussRat):
        a2 = v.abs2()
        if a2 == 0:
            return -math.inf
        return 0.5 * (math.log(a2.numerator) - math.log(a2.denominator))
    if isinstance(v, Fraction):
        if v == 0:
            return -math.inf
        return math.log(abs(v.numerator)) - math.log(v.denominator)
    a = abs(v)
    return math.log(a) if a > 0 else -math.inf


def _prefix_products(ms: Sequence[int]) -> tuple[int, ...]:
    return tuple(itertools.accumulate(ms, lambda x, y: x * y))


def weighted_sum(alpha: Sequence[int], ms: Sequence[int]) -> Fraction:
    """sum_i alpha_i / (m_1 ... m_i)."""
    return sum((Fraction(a, P) for a, P in zip(alpha, _prefix_products(ms))), Fraction(0))


# ---------------------------------------------------------------------------
# coefficient bounds over U

@dataclass(frozen=True)
class CoefficientBounds:
    B: tuple[float, ...]
    C: tuple[float, ...]


def _shift_bound(f, gamma: tuple[int, ...], R: float) -> float:
    """Upper bound of |coefficient of u^gamma in f(u+p)| for |p_i| <= R."""
    total = 0.0
    for beta, c in f.terms.items():
        if all(b >= g for b, g in zip(beta, gamma)):
            total += abs(c) * math.prod(comb(b, g) * R ** (b - g) for b, g in zip(beta, gamma))
    return total


def _targets(f) -> set[tuple[int, ...]]:
    out = set()
    for beta in f.terms:
        for g in itertools.product(*(range(b + 1) for b in beta)):
            if any(g):
                out.add(g)
    return out


def coefficient_bounds(sys: TriangularSystem) -> CoefficientBounds:
    """B_s, C_s >= 1 bounding |b_{s,j}(p)| and |c_{s,alpha}(p)| uniformly on U."""
    B, C = [], []
    R = sys.U_radius
    for s, f in enumerate(sys.fs, start=1):
        bmax, cmax = 1.0, 1.0
        for g in _targets(f):
            v = _shift_bound(f, g, R)
            if sum(g[: s - 1]) == 0:
                bmax = max(bmax, v)
            else:
                cmax = max(cmax, v)
        B.append(bmax)
        C.append(cmax)
    return CoefficientBounds(tuple(B), tuple(C))


def pure_lower_bounds(sys: TriangularSystem) -> tuple[float, ...]:
    """Lower bound of |b_{s,m_s}(p)| over U for each s."""
    out = []
    R = sys.U_radius
    for s, f in enumerate(sys.fs, start=1):
        g = [0] * sys.n
        g[s - 1] = sys.ms[s - 1]
        g = tuple(g)
        lead = abs(f.coefficient(g))
        rest = 0.0
        for beta, c in f.terms.items():
            if beta != g and all(b >= x for b, x in zip(beta, g)):
                rest += abs(c) * math.prod(comb(b, x) * R ** (b - x) for b, x in zip(beta, g))
        out.append(lead - rest)
    return tuple(out)


def check_neighborhood(sys: TriangularSystem) -> None:
    low = pure_lower_bounds(sys)
    for s, v in enumerate(low, start=1):
        if v < 1:
            raise InvalidInputError(
                f"|b_{s},{sys.ms[s - 1]}(p)| may drop below 1 on U (bound {v:.4g}); reduce U_radius")


def fit_neighborhood(sys: TriangularSystem, max_halvings: int = 40) -> TriangularSystem:
    """Halve U_radius until the leading pure coefficients stay >= 1 on U."""
    for _ in range(max_halvings):
        if min(pure_lower_bounds(sys)) >= 1:
            return sys
        sys = TriangularSystem(sys.fs, sys.ms, sys.normalization_scale, sys.U_radius / 2)
    raise InvalidInputError("could not find a neighborhood where the leading coefficients stay >= 1")


# ---------------------------------------------------------------------------
# threshold ledger

def compare_constants(ms: Sequence[int]) -> tuple[Fraction, ...]:
    """d_1, ..., d_n of the coefficient comparison lemma (exact)."""
    P = _prefix_products(ms)
    out = [Fraction(1, (ms[0] + 1) * 2 ** (ms[0] + 3))]
    for s in range(2, len(ms) + 1):
        m, Ps = ms[s - 1], P[s - 1]
        out.append(min(Fraction(1, (m + 1) * 2 ** (m + s + 3)), Fraction(1, (Ps + 1) * 2 ** (Ps + 3))))
    return tuple(out)


def mixed_index_floor(ms: Sequence[int], s: int) -> Fraction:
    """Smallest weighted sum above 1 that any alpha in M_s can reach: 1 + 1/(m_1...m_s)."""
    return 1 + Fraction(1, _prefix_products(ms)[s - 1])


def enumerate_A(ms: Sequence[int], s: int) -> Fraction | None:
    """min weighted sum over alpha in M_s with 1 < sum < 2, by exhaustive search (None if empty)."""
    if s == 1:
        return None
    P = _prefix_products(ms)[:s]
    best = None
    for alpha in itertools.product(*(range(2 * p + 1) for p in P)):
        if sum(alpha[: s - 1]) < 1:
            continue
        w = sum((Fraction(a, p) for a, p in zip(alpha, P)), Fraction(0))
        if 1 < w < 2 and (best is None or w < best):
            best = w
    return best


@dataclass(frozen=True)
class ConstantsLedger:
    mu: float
    log_mu: float
    ms: tuple[int, ...]
    U_radius: float
    B: tuple[float, ...]
    C: tuple[float, ...]
    log_M: tuple[float, ...]
    log_Delta: tuple[float, ...]
    log_delta_mu: float
    log_delta_prime: float
    A: tuple[Fraction, ...]
    log_Delta_prime: tuple[float, ...]
    log_delta_tilde: float
    N: int
    a: Fraction
    d_s: tuple[Fraction, ...]
    d: Fraction
    log_a_lo: float
    log_a_hi: float
    glob: object = field(default=None, compare=False)
    notes: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return len(self.ms)

    @property
    def log_B(self) -> tuple[float, ...]:
        return tuple(math.log(b) for b in self.B)

    @property
    def log_C(self) -> tuple[float, ...]:
        return tuple(math.log(c) for c in self.C)


DEFAULT_A = Fraction(1, 16)


def ledger(sys: TriangularSystem, mu: float | None = None, *, log_mu: float | None = None,
           a: Fraction = DEFAULT_A, with_globals: bool = True) -> ConstantsLedger:
    """All threshold constants for the given mu (pass ``log_mu`` for huge mu)."""
    if log_mu is None:
        if mu is None:
            raise InvalidInputError("mu or log_mu is required")
        if not mu > 1:
            raise InvalidInputError("mu must exceed 1")
        log_mu = math.log(mu)
    elif not log_mu > 0:
        raise InvalidInputError("mu must exceed 1")
    if not 0 < a < Fraction(1, 8):
        raise InvalidInputError("a must lie in (0, 1/8)")
    check_neighborhood(sys)
    ms = sys.ms
    n = len(ms)
    P = _prefix_products(ms)
    bounds = coefficient_bounds(sys)
    logB = [math.log(b) for b in bounds.B]
    logC = [math.log(c) for c in bounds.C]

    log_M = [0.0]
    for s in range(2, n + 1):
        cand = [(log_mu + logC[s - 1] + log_M[i]) / ms[s - 1] for i in range(s - 1)]
        log_M.append(max([0.0] + cand))

    log_Delta = [LOG_HALF]
    for s in range(2, n + 1):
        log_Delta.append(min(log_Delta[-1], LOG_HALF - 2 * P[s - 1] * log_M[s - 1]))
    log_delta_mu = min(log_Delta)

    log_delta_prime = min([log_delta_mu] + [-2 * P[s] * (logB[s] + log_M[s]) for s in range(n)])

    notes = []
    A = []
    for s in range(1, n + 1):
        floor = mixed_index_floor(ms, s)
        found = enumerate_A(ms, s)
        if found is None:
            A.append(floor)
            notes.append(f"A_{s}: M_{s} is empty; the analytic floor {floor} is used")
        else:
            if found != floor:
                raise AssertionError(f"A_{s} enumeration {found} disagrees with floor {floor}")
            A.append(found)

    log_Dp = []
    for s in range(n):
        base = log_delta_prime - 2 * (math.log(2) + log_mu + logC[s])
        log_Dp.append(base / float(A[s] - 1) + log_delta_prime)
    log_delta_tilde = min(log_Dp)

    N = max(ms)
    d_s = compare_constants(ms)
    d = min(d_s)
    log_a = math.log(a)
    glob = None
    if with_globals:
        from .psh import fix_global_constants
        glob = fix_global_constants(n, N, d, a)

    return ConstantsLedger(
        mu=float(mu) if mu is not None else (math.exp(log_mu) if log_mu < 700 else math.inf),
        log_mu=log_mu, ms=ms,
        U_radius=sys.U_radius, B=bounds.B, C=bounds.C, log_M=tuple(log_M),
        log_Delta=tuple(log_Delta), log_delta_mu=log_delta_mu, log_delta_prime=log_delta_prime,
        A=tuple(A), log_Delta_prime=tuple(log_Dp), log_delta_tilde=log_delta_tilde, N=N, a=a,
        d_s=d_s, d=d, log_a_lo=math.log(d) + (N + 1) * (2 * N + 1) * log_a,
        log_a_hi=math.log(d) + N * log_a, glob=glob, notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# envelopes and tau

def local_expansion(sys: TriangularSystem, p: Sequence, check_U: bool = True) -> LocalExpansion:
    """Exact recentering at p (float coordinates are taken as exact binary rationals)."""
    if len(p) != sys.n:
        raise InvalidInputError(f"point has {len(p)} coordinates, expected {sys.n}")
    exact = tuple(GaussRat.of(x) for x in p)
    if check_U:
        R2 = Fraction(sys.U_radius) ** 2
        for i, x in enumerate(exact, start=1):
            if x.abs2() > R2:
                raise InvalidInputError(f"coordinate {i} of the base point lies outside U")
    return expand_system(sys, exact)


def _F_lines(exp: LocalExpansion, s: int) -> list[tuple[float, int]]:
    lines = [(log_abs(v), j) for j, v in exp.b(s).items()]
    lines = [(c, j) for c, j in lines if c > -math.inf]
    if not lines:
        raise DegenerateInputError(f"all b_{s},j vanish at the base point")
    return lines


def _C_lines(exp: LocalExpansion, s: int, log_taus: Sequence[float], log_mu: float,
             log_delta: float) -> list[tuple[float, int, tuple[int, ...]]]:
    n = len(exp.base_point)
    lines = [(0.5 * log_delta, 0, (0,) * n)]
    for alpha, v in exp.c(s).items():
        la = log_abs(v)
        if la == -math.inf:
            continue
        icpt = log_mu + la + sum(alpha[i] * log_taus[i] for i in range(s - 1))
        lines.append((icpt, alpha[s - 1], alpha))
    return lines


def _close(x: float, y: float) -> bool:
    return abs(x - y) <= 1e-12 * max(1.0, abs(x), abs(y))


def envelope_F(exp: LocalExpansion, s: int, log_w: float) -> tuple[float, int]:
    """log F_s^p(|w|) and the least attaining j."""
    vals = [(c + j * log_w, j) for c, j in _F_lines(exp, s)]
    top = max(v for v, _ in vals)
    return top, min(j for v, j in vals if _close(v, top))


def _C_key(alpha: tuple[int, ...], s: int):
    if not any(alpha):
        return (0, -1, ())
    return (1, alpha[s - 1], alpha[: s - 1])


def envelope_C(exp: LocalExpansion, s: int, log_taus: Sequence[float], log_mu: float,
               log_delta: float, log_w: float) -> tuple[float, tuple[int, ...]]:
    """log C_{s,delta}^p(mu,|w|) and the attaining index; the zero vector marks the delta term."""
    vals = [(c + k * log_w, a) for c, k, a in _C_lines(exp, s, log_taus, log_mu, log_delta)]
    top = max(v for v, _ in vals)
    winner = min((a for v, a in vals if _close(v, top)), key=lambda a: _C_key(a, s))
    return top, winner


def tau_coordinate(exp: LocalExpansion, s: int, log_taus: Sequence[float], log_mu: float,
                   log_delta: float) -> float:
    """log tau_s: the first radius where the F envelope reaches the C envelope."""
    F = _F_lines(exp, s)
    C = _C_lines(exp, s, log_taus, log_mu, log_delta)
    cands = set()
    for cf, j in F:
        for cc, k, _ in C:
            if j != k:
                x = (cc - cf) / (j - k)
                if x < 0:
                    cands.add(x)
    for x in sorted(cands):
        fv = max(c + j * x for c, j in F)
        cv = max(c + k * x for c, k, _ in C)
        if fv - cv >= -1e-12 * max(1.0, abs(fv), abs(cv)):
            return x
    raise InfeasibleScaleError(f"no radius in (0,1) where F_{s} reaches C_{s}; delta is too large")


@dataclass(frozen=True)
class TypeSignature:
    entries: tuple[tuple[int, tuple[int, ...]], ...]

    def to_json(self) -> list:
        return [[j, list(k)] for j, k in self.entries]


@dataclass(frozen=True)
class ApproxSystem:
    base_point: tuple
    log_tau: tuple[float, ...]
    log_sigma: tuple[float, ...]
    J: tuple[int, ...]
    K: tuple[tuple[int, ...], ...]
    log_mu: float
    log_delta: float
    strict_mode: bool

    @property
    def n(self) -> int:
        return len(self.log_tau)

    @property
    def tau_values(self) -> tuple[float, ...]:
        return tuple(math.exp(x) for x in self.log_tau)


def tau(exp: LocalExpansion, sys: TriangularSystem, led: ConstantsLedger | None = None,
        mu: float | None = None, delta: float | None = None, *, log_mu: float | None = None,
        log_delta: float | None = None, strict: bool = True) -> ApproxSystem:
    """Approximate system at the expansion's base point.

    Strict mode needs the ledger for the same mu and delta <= delta_tilde.
    Relaxed mode accepts any delta <= 1/2 and marks the record.
    """
    if log_mu is None:
        if mu is None:
            if led is None:
                raise InvalidInputError("mu is required")
            log_mu = led.log_mu
        else:
            log_mu = math.log(mu)
    if log_delta is None:
        if delta is None or not delta > 0:
            raise InvalidInputError("delta must be positive")
        log_delta = math.log(delta)
    if log_mu <= 0:
        raise InvalidInputError("mu must exceed 1")
    if strict:
        if led is None:
            raise InvalidInputError("strict mode needs the constants ledger")
        if not _close(led.log_mu, log_mu):
            raise InvalidInputError("ledger was computed for a different mu")
        if log_delta > led.log_delta_tilde * (1 - 1e-15):
            raise InvalidInputError(
                f"strict mode needs log delta <= {led.log_delta_tilde:.6g}, got {log_delta:.6g}")
    elif log_delta > LOG_HALF + 1e-15:
        raise InvalidInputError("delta must not exceed 1/2")

    n = sys.n
    log_taus: list[float] = []
    sig, Js, Ks = [], [], []
    for s in range(1, n + 1):
        x = tau_coordinate(exp, s, log_taus, log_mu, log_delta)
        fv, j = envelope_F(exp, s, x)
        _, k = envelope_C(exp, s, log_taus, log_mu, log_delta, x)
        log_taus.append(x)
        sig.append(fv)
        Js.append(j)
        Ks.append(k)
    return ApproxSystem(exp.base_point, tuple(log_taus), tuple(sig), tuple(Js), tuple(Ks),
                        log_mu, log_delta, strict)


def type_signature(ap: ApproxSystem) -> TypeSignature:
    return TypeSignature(tuple(zip(ap.J, ap.K)))


# ---------------------------------------------------------------------------
# scaling and finiteness

@dataclass(frozen=True)
class ScalingReport:
    a: float
    margins: tuple[float, ...]
    passed: bool


def scaling_check(exp: LocalExpansion, sys: TriangularSystem, led: ConstantsLedger | None,
                  log_mu: float, log_delta: float, a: float, strict: bool = True) -> ScalingReport:
    """Margins of log tau_s(a delta) <= log tau_s(delta) + log(a)/(2 m_1...m_s)."""
    if not 0 < a < 1:
        raise InvalidInputError("a must lie in (0, 1)")
    if strict and (led is None or log_delta > led.log_delta_prime):
        raise InvalidInputError("strict scaling check needs delta <= delta'")
    # delta <= delta' only is guaranteed; evaluate tau without the delta_tilde gate
    t0 = tau(exp, sys, led, log_mu=log_mu, log_delta=log_delta, strict=False)
    t1 = tau(exp, sys, led, log_mu=log_mu, log_delta=log_delta + math.log(a), strict=False)
    P = _prefix_products(sys.ms)
    margins = tuple(t0.log_tau[s] + math.log(a) / (2 * P[s]) - t1.log_tau[s] for s in range(sys.n))
    return ScalingReport(a, margins, min(margins) >= -1e-9)


def admissible_mixed(ms: Sequence[int], s: int) -> list[tuple[int, ...]]:
    """alpha in M_s with weighted sum <= 1 and alpha_s < m_s (possible nonzero K_s)."""
    if s == 1:
        return []
    n = len(ms)
    P = _prefix_products(ms)[:s]
    out = []
    for alpha in itertools.product(*(range(p + 1) for p in P[:-1]), range(ms[s - 1])):
        if sum(alpha[:-1]) >= 1 and weighted_sum(alpha, ms[:s]) <= 1:
            out.append(tuple(alpha) + (0,) * (n - s))
    return out


def signature_bound(ms: Sequence[int]) -> int:
    """Upper bound on the number of strict-mode type signatures."""
    return math.prod(m * (1 + len(admissible_mixed(ms, s))) for s, m in enumerate(ms, start=1))


def signature_violations(ap: ApproxSystem, ms: Sequence[int]) -> list[str]:
    """Finiteness constraints on (J_s, K_s) that fail for this record."""
    bad = []
    for s, (j, k) in enumerate(zip(ap.J, ap.K), start=1):
        if not 1 <= j <= ms[s - 1]:
            bad.append(f"J_{s}={j} outside [1, {ms[s - 1]}]")
        if any(k):
            if weighted_sum(k[:s], ms[:s]) > 1:
                bad.append(f"K_{s} weighted sum exceeds 1")
            if not k[s - 1] < j:
                bad.append(f"k_{s}^{s}={k[s - 1]} is not below J_{s}={j}")
    return bad


# ---------------------------------------------------------------------------
# stability

def stability_constants(ap: ApproxSystem) -> tuple[float, ...]:
    """log Q_s bounding tau_s ratios between comparable points with this signature."""
    logQ: list[float] = []
    l53 = math.log(5 / 3)
    for s, (j, k) in enumerate(zip(ap.J, ap.K), start=1):
        if not any(k):
            logQ.append(l53 / j)
        else:
            chain = 2 * l53 + sum(k[i] * logQ[i] for i in range(s - 1))
            logQ.append(chain / (j - k[s - 1]))
    return tuple(logQ)


@dataclass(frozen=True)
class StabilityReport:
    comparable: bool
    overlapping: bool
    same_types: bool
    log_ratios: tuple[float, ...]
    log_Q: tuple[float, ...]
    coefficient_margins: tuple[float, ...]
    passed: bool
    reason: str = ""


def _bridge_point(p, q, rp: Sequence[float], rq: Sequence[float]):
    """A point in both closed polydiscs (centres p, q, radii rp, rq) if they meet."""
    out = []
    for x, y, a, b in zip(p, q, rp, rq):
        t = Fraction(a) / (Fraction(a) + Fraction(b)) if a + b > 0 else Fraction(1, 2)
        out.append(x + (y - x) * t)
    return tuple(out)


def _polydiscs_meet(p, q, log_rp: Sequence[float], log_rq: Sequence[float]) -> bool:
    for x, y, a, b in zip(p, q, log_rp, log_rq):
        dist = log_abs(GaussRat.of(x) - GaussRat.of(y))
        hi = max(a, b)
        if dist > hi + math.log1p(math.exp(min(a, b) - hi)) + 1e-12:
            return False
    return True


def _radius_fraction(log_r: float) -> Fraction:
    # exact binary rational just below exp(log_r), representable at any scale
    e = math.floor(log_r / math.log(2)) - 53
    mant = math.floor(math.exp(log_r - e * math.log(2)))
    return Fraction(mant) * Fraction(2) ** e


def stability_check(sys: TriangularSystem, led: ConstantsLedger, log_mu: float, log_delta: float,
                    p: Sequence, q: Sequence, strict: bool = True) -> StabilityReport:
    exp_p = local_expansion(sys, p)
    exp_q = local_expansion(sys, q)
    ap = tau(exp_p, sys, led, log_mu=log_mu, log_delta=log_delta, strict=strict)
    aq = tau(exp_q, sys, led, log_mu=log_mu, log_delta=log_delta, strict=strict)
    log_d = math.log(led.d)
    rp = [log_d + x for x in ap.log_tau]
    rq = [log_d + x for x in aq.log_tau]
    overlapping = _polydiscs_meet(exp_p.base_point, exp_q.base_point, rp, rq)
    same = type_signature(ap) == type_signature(aq)
    log_Q = stability_constants(ap)
    ratios = tuple(x - y for x, y in zip(ap.log_tau, aq.log_tau))
    if not (overlapping and same):
        reason = "boxes do not meet" if not overlapping else "type signatures differ"
        return StabilityReport(False, overlapping, same, ratios, log_Q, (), False, reason)

    mid = _bridge_point(exp_p.base_point, exp_q.base_point,
                        [_radius_fraction(r) for r in rp], [_radius_fraction(r) for r in rq])
    exp_m = expand_system(sys, mid)
    margins = []
    for s, j in enumerate(ap.J, start=1):
        for base in (exp_p, exp_q):
            b0 = base.b(s).get(j, GaussRat(Fraction(0)))
            b1 = exp_m.b(s).get(j, GaussRat(Fraction(0)))
            # margin: log(|b0|/4) - log|b1 - b0|
            margins.append(log_abs(b0) - math.log(4) - log_abs(b1 - b0))
    ok_ratio = all(abs(r) <= lq + 1e-9 for r, lq in zip(ratios, log_Q))
    ok_coef = all(m >= -1e-9 for m in margins)
    return StabilityReport(True, True, True, ratios, log_Q, tuple(margins), ok_ratio and ok_coef)

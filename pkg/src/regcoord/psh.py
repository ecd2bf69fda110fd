"""Cutoffs, global constants, derivative windows and the weights G, G~ and g.

Complex Hessians use the convention H[j, k] = d^2 phi / dz_j dconj(z_k), so the
Levi form in direction t is t^T H conj(t).  Points in C^{n+1} near the boundary
are described by (u, q) with u = z - p and q = 4 eta r(z') / delta.  The strip
S(c delta) is q >= -log 4, and r itself is never formed because it is far
below double resolution for realistic eta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .approx import ApproxSystem, ConstantsLedger, envelope_F, log_abs
from .polycore import ComplexPoly, LocalExpansion, NumericPoly

LOG4 = math.log(4)
LOG65 = math.log(6) - math.log(5)
# radii below exp(-300) lose their squares and fourth powers to underflow
LOG_RADIUS_FLOOR = -150.0


# ---------------------------------------------------------------------------
# cutoff chi and convex P

def _bridge_coefficients(n: int) -> tuple[Fraction, ...]:
    """Quintic h(s) on s in [0, 1] (t = 1/2 + s/2) matching chi's linear branch at 0 and zero at 1."""
    h0 = Fraction(3, 4) - Fraction(1, 4 * n)
    h1 = Fraction(1, 4 * n)
    # with c2 = 0 the end conditions h(1) = h'(1) = h''(1) = 0 give a 3x3 system
    r0, r1, r2 = -(h0 + h1), -h1, Fraction(0)
    # rows: [1 1 1], [3 4 5], [6 12 20]
    c5 = (r2 - 6 * r0 - 6 * (r1 - 3 * r0)) / 2
    c4 = r1 - 3 * r0 - 2 * c5
    c3 = r0 - c4 - c5
    return (h0, h1, Fraction(0), c3, c4, c5)


@dataclass(frozen=True)
class CutoffSpec:
    """chi(t) = t/(2n) + 3/4 - 1/(2n) on [0, 1/2], a quintic bridge on [1/2, 1], 0 beyond."""

    n: int
    bridge: tuple[Fraction, ...]
    M: float
    M_grid: float
    peak: float

    def _poly(self, k: int = 0) -> np.polynomial.Polynomial:
        p = np.polynomial.Polynomial([float(c) for c in self.bridge])
        return p.deriv(k) if k else p

    def value(self, t):
        t = np.asarray(t, dtype=float)
        s = 2 * t - 1
        lin = t / (2 * self.n) + 0.75 - 1 / (2 * self.n)
        return np.where(t <= 0.5, lin, np.where(t >= 1, 0.0, self._poly()(s)))

    def d1(self, t):
        t = np.asarray(t, dtype=float)
        s = 2 * t - 1
        return np.where(t <= 0.5, 1 / (2 * self.n), np.where(t >= 1, 0.0, 2 * self._poly(1)(s)))

    def d2(self, t):
        t = np.asarray(t, dtype=float)
        s = 2 * t - 1
        return np.where(t <= 0.5, 0.0, np.where(t >= 1, 0.0, 4 * self._poly(2)(s)))


def _max_abs_on_unit(p: np.polynomial.Polynomial) -> float:
    pts = [0.0, 1.0] + [r.real for r in p.deriv().roots() if abs(r.imag) < 1e-12 and 0 < r.real < 1]
    return max(abs(p(x)) for x in pts)


def chi_build(n: int) -> CutoffSpec:
    if n < 1:
        raise ValueError("n must be positive")
    coeffs = _bridge_coefficients(n)
    h = np.polynomial.Polynomial([float(c) for c in coeffs])
    # chi' = 2 h'(s), chi'' = 4 h''(s) on the bridge
    M_bound = max(2 * _max_abs_on_unit(h.deriv()) + 4 * _max_abs_on_unit(h.deriv(2)), 1 / (2 * n))
    spec = CutoffSpec(n, coeffs, M_bound, 0.0, 0.0)
    t = np.linspace(0, 1.5, 10001)
    v = spec.value(t)
    M_grid = float(np.max(np.abs(spec.d1(t)) + np.abs(spec.d2(t))))
    if v.min() < -1e-12 or v.max() >= 0.75:
        raise ValueError("bridge leaves [0, 3/4)")
    if M_grid > M_bound * (1 + 1e-12):
        raise ValueError("grid exceeds the derived bound on |chi'| + |chi''|")
    # h = (1-s)^3 q with q quadratic; h >= 0 needs q >= 0 on [0, 1]
    q, rem = divmod(h, np.polynomial.Polynomial([1, -3, 3, -1]))
    if np.max(np.abs(rem.coef)) > 1e-9 or _min_on_unit(q) < 0:
        raise ValueError("bridge is negative somewhere on [1/2, 1]")
    if bridge_sign_changes(coeffs) != 1:
        raise ValueError("bridge is not unimodal")
    return CutoffSpec(n, coeffs, M_bound, M_grid, float(v.max()))


def _min_on_unit(p: np.polynomial.Polynomial) -> float:
    pts = [0.0, 1.0] + [r.real for r in p.deriv().roots() if abs(r.imag) < 1e-12 and 0 < r.real < 1]
    return min(p(x) for x in pts)


def bridge_sign_changes(coeffs: Sequence[Fraction]) -> int:
    """Sign changes of h' on (0, 1); h' = (1-s)^2 q2 with q2 quadratic."""
    h = np.polynomial.Polynomial([float(c) for c in coeffs])
    q2, _ = divmod(h.deriv(), np.polynomial.Polynomial([1, -2, 1]))
    roots = [r.real for r in q2.roots() if abs(r.imag) < 1e-12 and 0 < r.real < 1]
    return sum(1 for r in roots if abs(q2.deriv()(r)) > 1e-12)


@dataclass(frozen=True)
class PSpec:
    """P(t) = kappa (t - 1/4)_+^3 with P(1) = 1."""

    threshold: float = 0.25
    kappa: float = 64 / 27

    @property
    def C_prime(self) -> float:
        return 3 * self.kappa * (1 / 3 - self.threshold) ** 2

    def value(self, t):
        x = np.maximum(np.asarray(t, dtype=float) - self.threshold, 0.0)
        return self.kappa * x**3

    def d1(self, t):
        x = np.maximum(np.asarray(t, dtype=float) - self.threshold, 0.0)
        return 3 * self.kappa * x**2

    def d2(self, t):
        x = np.maximum(np.asarray(t, dtype=float) - self.threshold, 0.0)
        return 6 * self.kappa * x


P_SPEC = PSpec()


# ---------------------------------------------------------------------------
# global constants

@dataclass(frozen=True)
class GlobalConstants:
    n: int
    N: int
    d: Fraction
    a: Fraction
    M: float
    log_mu1: float
    log_D: float
    log_eta: float
    log_mu: float
    log_c: float
    log_d_strip: float

    @property
    def eta(self) -> float:
        return _checked_exp(self.log_eta, "eta")

    @property
    def c(self) -> float:
        return math.exp(self.log_c)

    @property
    def d_strip(self) -> float:
        return math.exp(self.log_d_strip)


def _checked_exp(x: float, name: str) -> float:
    if x > 709:
        raise ValueError(f"{name} = exp({x:.6g}) is not representable as a double")
    return math.exp(x)


def fix_global_constants(n: int, N: int, d: Fraction, a: Fraction) -> GlobalConstants:
    M = chi_build(n).M
    la, ld = math.log(a), math.log(d)
    log_mu1 = (n + N + 3) * math.log(2) - N * ld - N * (N + 1) * (2 * N + 1) * la
    log_D = -(N + 2) * math.log(2) + N * ld + N * (N + 1) * (2 * N + 1) * la
    log_eta = math.log(2 * (M + 1)) - 2 * log_D
    log_mu = max(log_mu1, 0.5 * (3 * math.log(n) + (2 * n + 5) * math.log(2) + log_eta))
    log_c = math.log(LOG4) - math.log(4) - log_eta
    log_d_strip = math.log(LOG65) - math.log(4) - log_eta
    return GlobalConstants(n, N, Fraction(d), Fraction(a), M, log_mu1, log_D, log_eta, log_mu,
                           log_c, log_d_strip)


# ---------------------------------------------------------------------------
# derivative windows

@dataclass(frozen=True)
class DerivativeWindow:
    s: int
    k: int
    log_w1: float
    log_w2: float
    log_a_s: float
    steps: int


def derivative_window(exp: LocalExpansion, s: int, ap: ApproxSystem, led: ConstantsLedger) -> DerivativeWindow:
    """Descend from d tau_s by factors a^(2N+1) until one monomial of F_s dominates a full step."""
    N = led.N
    la = math.log(led.a)
    step = (2 * N + 1) * la
    x = math.log(led.d) + ap.log_tau[s - 1]
    _, k = envelope_F(exp, s, x)
    for i in range(1, N + 2):
        x_next = x + step
        _, k_next = envelope_F(exp, s, x_next)
        if k_next == k:
            w1, w2 = x_next - N * la, x + N * la
            return DerivativeWindow(s, k, w1, w2, w2 - ap.log_tau[s - 1], i)
        x, k = x_next, k_next
    raise RuntimeError(f"dominance descent for s={s} did not settle within {N + 1} steps")


def derivative_windows(exp: LocalExpansion, ap: ApproxSystem, led: ConstantsLedger) -> tuple[DerivativeWindow, ...]:
    return tuple(derivative_window(exp, s, ap, led) for s in range(1, ap.n + 1))


# ---------------------------------------------------------------------------
# sampling

def halton(dim: int, count: int, seed: int) -> np.ndarray:
    return qmc.Halton(d=dim, scramble=True, seed=seed).random(count)


def polydisc_samples(radii: Sequence[float], count: int, seed: int,
                     inner: Sequence[float] | None = None, extra: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Low-discrepancy points with |u_i| <= radii[i] (and >= inner[i] if given).

    Returns (u, rest) where rest holds ``extra`` additional uniform coordinates.
    """
    n = len(radii)
    h = halton(2 * n + extra, count, seed)
    R = np.asarray(radii, dtype=float)
    r0 = np.zeros(n) if inner is None else np.asarray(inner, dtype=float)
    rad = np.sqrt(r0**2 + h[:, :n] * (R**2 - r0**2))
    ang = 2 * np.pi * h[:, n:2 * n]
    return rad * np.exp(1j * ang), h[:, 2 * n:]


def unit_polydisc_samples(dim: int, count: int, seed: int, inner: Sequence[float] | None = None):
    u, _ = polydisc_samples([1.0] * dim, count, seed, inner)
    return u


# ---------------------------------------------------------------------------
# partial derivative bounds in log scale

def _log_partial(exp: LocalExpansion, s: int, i: int, log_r: Sequence[float], zeta: np.ndarray) -> float:
    """log|d f_s / d u_i| at u = exp(log_r) * zeta, stable at any scale."""
    terms = []
    for e, v in exp.reconstruct(s).items():
        if e[i - 1] == 0:
            continue
        lm = log_abs(v) + math.log(e[i - 1]) + sum(
            (e[k] - (1 if k == i - 1 else 0)) * log_r[k] for k in range(len(e)))
        ph = complex(v) / abs(complex(v)) if abs(complex(v)) > 0 else 1.0
        zeta_part = np.prod([zeta[k] ** (e[k] - (1 if k == i - 1 else 0)) for k in range(len(e))])
        terms.append((lm, ph * zeta_part))
    if not terms:
        return -math.inf
    top = max(t for t, _ in terms)
    total = sum(z * math.exp(t - top) for t, z in terms)
    return top + math.log(abs(total)) if abs(total) > 0 else -math.inf


@dataclass(frozen=True)
class PartialBoundsReport:
    sample_count: int
    diag_margins: tuple[float, ...]
    mixed_margins: tuple[float, ...]
    annulus_margins: tuple[float, ...]
    passed: bool


def verify_partial_bounds(exp: LocalExpansion, ap: ApproxSystem, led: ConstantsLedger,
                          windows: Sequence[DerivativeWindow], log_D: float,
                          samples: int = 1000, seed: int = 0) -> PartialBoundsReport:
    """Minimum log-margins of the diagonal and mixed derivative bounds on the annular boxes.

    ``annulus_margins`` checks |d f_s/d u_s| against half the dominant
    monomial's derivative minus the mixed correction.
    """
    n = ap.n
    log_box = [w.log_a_s + t for w, t in zip(windows, ap.log_tau)]
    diag, mixed, ann = [], [], []
    log_bound_mixed = (n + 1) * math.log(2) - ap.log_mu
    for s in range(1, n + 1):
        inner = [0.0] * n
        inner[s - 1] = 0.5
        zeta = unit_polydisc_samples(n, samples, seed + s, inner)
        dmin, mmin, amin = math.inf, math.inf, math.inf
        k = windows[s - 1].k
        bk = exp.b(s)[k]
        for z in zeta:
            lp = _log_partial(exp, s, s, log_box, z)
            dmin = min(dmin, lp - (log_D + ap.log_sigma[s - 1] - log_box[s - 1]))
            # half the dominant term minus the mixed correction, in linear scale relative to it
            ls = log_box[s - 1] + math.log(abs(z[s - 1]))
            lead = log_abs(bk) + math.log(k) + (k - 1) * ls
            corr = []
            for a, v in exp.c(s).items():
                if a[s - 1] >= 1:
                    lm = log_abs(v) + math.log(a[s - 1]) + sum(
                        (a[j] - (1 if j == s - 1 else 0)) * (log_box[j] + math.log(abs(z[j]) or 1e-300))
                        for j in range(n))
                    corr.append(lm)
            rhs = 0.5 - sum(math.exp(c - lead) for c in corr)
            amin = min(amin, (lp - lead) - (math.log(rhs) if rhs > 0 else -math.inf))
        if s > 1:
            for z in unit_polydisc_samples(n, samples, seed + 100 + s):
                for i in range(1, s):
                    lq = _log_partial(exp, s, i, log_box, z)
                    mmin = min(mmin, (log_bound_mixed + ap.log_sigma[s - 1] - log_box[i - 1]) - lq)
        diag.append(dmin)
        ann.append(amin)
        if s > 1:
            mixed.append(mmin)
    passed = min(diag + ann) >= -1e-9 and (not mixed or min(mixed) >= -1e-9)
    return PartialBoundsReport(samples, tuple(diag), tuple(mixed), tuple(ann), passed)


# ---------------------------------------------------------------------------
# weights

class LocalModel:
    """f_1..f_n recentred at p, evaluated in float at small offsets u."""

    def __init__(self, exp: LocalExpansion):
        self.n = len(exp.base_point)
        self.polys: list[NumericPoly] = []
        for s in range(1, self.n + 1):
            terms = {e: v for e, v in exp.reconstruct(s).items()}
            const = exp.constant[exp.row(s)]
            if const != 0:
                terms[(0,) * self.n] = const
            self.polys.append(ComplexPoly(self.n, terms).numeric())

    def values(self, u: np.ndarray) -> np.ndarray:
        return np.stack([p.value(u) for p in self.polys], axis=-1)

    def jacobian(self, u: np.ndarray) -> np.ndarray:
        """J[..., s, i] = d f_s / d u_i."""
        return np.stack([p.gradient(u) for p in self.polys], axis=-2)


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., :, None] * np.conj(b)[..., None, :]


@dataclass
class WeightBase:
    model: LocalModel
    radii: np.ndarray          # a_i tau_i
    eta: float
    delta: float
    chi: CutoffSpec
    log_tau: tuple[float, ...] = ()
    P: PSpec = field(default_factory=PSpec)

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def scale(self) -> float:
        return _checked_exp(math.log(self.eta) - math.log(self.delta), "eta/delta")

    def _chi_parts(self, u: np.ndarray):
        R2 = self.radii**2
        t = np.abs(u) ** 2 / R2
        v = self.chi.value(t)
        c1, c2 = self.chi.d1(t), self.chi.d2(t)
        grad = c1 * np.conj(u) / R2
        hdiag = c1 / R2 + c2 * np.abs(u) ** 2 / R2**2
        return v, grad, hdiag


class WeightG(WeightBase):
    """G = eta sum |f_s|^2 / delta + sum chi(|u_s|^2 / (a_s tau_s)^2)."""

    def value(self, u):
        u = np.asarray(u, dtype=complex)
        f = self.model.values(u)
        v, _, _ = self._chi_parts(u)
        return self.scale * np.sum(np.abs(f) ** 2, axis=-1) + np.sum(v, axis=-1)

    def gradient(self, u):
        u = np.asarray(u, dtype=complex)
        f = self.model.values(u)
        J = self.model.jacobian(u)
        _, g, _ = self._chi_parts(u)
        return self.scale * np.einsum("...s,...si->...i", np.conj(f), J) + g

    def hessian(self, u):
        u = np.asarray(u, dtype=complex)
        J = self.model.jacobian(u)
        _, _, hd = self._chi_parts(u)
        H = self.scale * np.einsum("...sj,...sk->...jk", J, np.conj(J))
        idx = np.arange(self.n)
        H[..., idx, idx] += hd
        return H


class WeightGTilde(WeightBase):
    """G~ = exp(4 eta r / delta) + sum chi, with q = 4 eta r / delta as the strip coordinate."""

    @property
    def kappa(self) -> float:
        return 4 * self.scale

    def value(self, u, q):
        u = np.asarray(u, dtype=complex)
        v, _, _ = self._chi_parts(u)
        return np.exp(q) + np.sum(v, axis=-1)

    def frame_gradient(self, u, q):
        """dG~ applied to the frame vectors L'_1..L'_{n+1}."""
        u = np.asarray(u, dtype=complex)
        _, g, _ = self._chi_parts(u)
        last = (np.exp(q) * self.kappa / 2)[..., None]
        return np.concatenate([g, last.astype(complex)], axis=-1)

    def frame_hessian(self, u, q):
        u = np.asarray(u, dtype=complex)
        q = np.asarray(q, dtype=float)
        J = self.model.jacobian(u)
        _, _, hd = self._chi_parts(u)
        e = np.exp(q)
        n = self.n
        H = np.zeros(u.shape[:-1] + (n + 1, n + 1), dtype=complex)
        Hf = np.einsum("...sj,...sk->...jk", J, np.conj(J))
        H[..., :n, :n] = (e * self.kappa)[..., None, None] * Hf
        idx = np.arange(n)
        H[..., idx, idx] += hd
        H[..., n, n] = e * self.kappa**2 / 4
        return H

    # full coordinates z' = (p + u, z_{n+1}); used for finite-difference checks
    def r_full(self, u, w):
        f = self.model.values(np.asarray(u, dtype=complex))
        return np.real(w) + np.sum(np.abs(f) ** 2, axis=-1)

    def value_full(self, u, w):
        return self.value(u, 4 * self.scale * self.r_full(u, w))

    def gradient_full(self, u, w):
        u = np.asarray(u, dtype=complex)
        f = self.model.values(u)
        J = self.model.jacobian(u)
        _, g, _ = self._chi_parts(u)
        e = np.exp(4 * self.scale * self.r_full(u, w))
        dr = np.einsum("...s,...si->...i", np.conj(f), J)
        gz = (e * self.kappa)[..., None] * dr + g
        gw = (e * self.kappa / 2)[..., None]
        return np.concatenate([gz, gw], axis=-1)

    def hessian_full(self, u, w):
        u = np.asarray(u, dtype=complex)
        f = self.model.values(u)
        J = self.model.jacobian(u)
        _, _, hd = self._chi_parts(u)
        e = np.exp(4 * self.scale * self.r_full(u, w))
        n = self.n
        dr = np.concatenate([np.einsum("...s,...si->...i", np.conj(f), J),
                             np.full(u.shape[:-1] + (1,), 0.5, dtype=complex)], axis=-1)
        H = (e * self.kappa**2)[..., None, None] * _outer(dr, dr)
        Hf = np.einsum("...sj,...sk->...jk", J, np.conj(J))
        H[..., :n, :n] += (e * self.kappa)[..., None, None] * Hf
        idx = np.arange(n)
        H[..., idx, idx] += hd
        return H

    def frame(self, u, w=None) -> "TangentialFrame":
        u = np.asarray(u, dtype=complex)
        f = self.model.values(u)
        J = self.model.jacobian(u)
        dr = np.einsum("s,si->i", np.conj(f), J)
        return TangentialFrame(np.concatenate([dr, [0.5]]))


class WeightSmallG(WeightGTilde):
    """g = P(G~ - 3n/4)."""

    def value(self, u, q):
        return self.P.value(super().value(u, q) - 0.75 * self.n)

    def frame_hessian(self, u, q):
        arg = super().value(u, q) - 0.75 * self.n
        w = self.frame_gradient(u, q)
        base = super().frame_hessian(u, q)
        return self.P.d2(arg)[..., None, None] * _outer(w, w) + self.P.d1(arg)[..., None, None] * base

    def value_full(self, u, w):
        return self.value(u, 4 * self.scale * self.r_full(u, w))

    def gradient_full(self, u, w):
        q = 4 * self.scale * self.r_full(u, w)
        arg = WeightGTilde.value(self, u, q) - 0.75 * self.n
        return self.P.d1(arg)[..., None] * super().gradient_full(u, w)

    def hessian_full(self, u, w):
        q = 4 * self.scale * self.r_full(u, w)
        arg = WeightGTilde.value(self, u, q) - 0.75 * self.n
        gr = super().gradient_full(u, w)
        return (self.P.d2(arg)[..., None, None] * _outer(gr, gr)
                + self.P.d1(arg)[..., None, None] * super().hessian_full(u, w))


@dataclass(frozen=True)
class TangentialFrame:
    """Columns L'_i = e_i - 2 (dr/dz_i) e_{n+1} (i <= n) and L'_{n+1} = e_{n+1}."""

    dr: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        n = len(self.dr) - 1
        T = np.eye(n + 1, dtype=complex)
        T[n, :n] = -2 * self.dr[:n] / (2 * self.dr[n])
        return T

    def apply_dr(self) -> np.ndarray:
        """dr(L'_i) for every frame vector."""
        return self.dr @ self.matrix

    def transform(self, H: np.ndarray) -> np.ndarray:
        T = self.matrix
        return T.T @ H @ np.conj(T)


def build_weights(exp: LocalExpansion, ap: ApproxSystem, windows: Sequence[DerivativeWindow],
                  eta: float, delta: float | None = None, chi: CutoffSpec | None = None):
    """(G, G~, g) for one base point."""
    log_r = [w.log_a_s + t for w, t in zip(windows, ap.log_tau)]
    if min(log_r) < LOG_RADIUS_FLOOR or ap.log_delta < LOG_RADIUS_FLOOR:
        raise ValueError("box radii or delta underflow double precision at this scale; "
                         "float weights need a larger (relaxed) delta")
    delta = math.exp(ap.log_delta) if delta is None else delta
    radii = np.array([math.exp(x) for x in log_r])
    chi = chi or chi_build(ap.n)
    model = LocalModel(exp)
    args = (model, radii, eta, delta, chi, ap.log_tau)
    return WeightG(*args), WeightGTilde(*args), WeightSmallG(*args)


# ---------------------------------------------------------------------------
# certification

def normalized_margin(H: np.ndarray, floor: np.ndarray) -> float:
    """lambda_min(B^{-1/2} H B^{-1/2}) - 1 with B = diag(floor), robust to grading."""
    b = 1 / np.sqrt(np.asarray(floor, dtype=float))
    Nm = (H * b[:, None]) * b[None, :]
    Nm = 0.5 * (Nm + Nm.conj().T)
    dg = np.real(np.diag(Nm))
    if np.all(dg > 0):
        S = 1 / np.sqrt(dg)
        A = (Nm * S[:, None]) * S[None, :]
        try:
            L = np.linalg.cholesky(A)
            Ainv = np.linalg.inv(L).conj().T @ np.linalg.inv(L)
            top = np.linalg.eigvalsh((Ainv * S[:, None]) * S[None, :])[-1]
            return float(1 / top - 1)
        except np.linalg.LinAlgError:
            pass
    return float(np.linalg.eigvalsh(Nm)[0] - 1)


def psh_margin(H: np.ndarray) -> float:
    """Smallest eigenvalue after unit-diagonal scaling; zero rows are dropped."""
    H = 0.5 * (H + H.conj().T)
    dg = np.real(np.diag(H))
    keep = np.abs(dg) > 0
    if not np.any(keep):
        return 0.0
    H = H[np.ix_(keep, keep)]
    dg = dg[keep]
    if np.any(dg < 0):
        return float(np.min(dg / np.abs(dg)))
    S = 1 / np.sqrt(dg)
    return float(np.linalg.eigvalsh((H * S[:, None]) * S[None, :])[0])


@dataclass(frozen=True)
class HessianReport:
    region: str
    sample_count: int
    margins: tuple[float, ...]
    min_margin: float
    passed: bool
    extra: dict = field(default_factory=dict, compare=False)


def _report(region: str, margins: list[float], extra=None) -> HessianReport:
    m = min(margins) if margins else 0.0
    return HessianReport(region, len(margins), tuple(margins), m, m >= -1e-9, extra or {})


def verify_hessian_G(G: WeightG, samples: int = 1000, seed: int = 0) -> HessianReport:
    """H(G) >= (1/4n) diag(1/(a_i tau_i)^2) on R(p: a_1..a_n)."""
    u, _ = polydisc_samples(G.radii, samples, seed)
    floor = 1 / (4 * G.n * G.radii**2)
    H = G.hessian(u)
    return _report("R(p:a)", [normalized_margin(h, floor) for h in H])


def assembled_C(n: int, a_values: Sequence[float], P: PSpec = P_SPEC) -> float:
    return P.C_prime / (4 * n) * min(a_values) ** 2


def strip_samples(radii: np.ndarray, samples: int, seed: int, q_lo: float, q_hi: float = 0.0):
    u, rest = polydisc_samples(radii, samples, seed, extra=1)
    return u, q_lo + (q_hi - q_lo) * rest[:, 0]


def verify_hessian_g(g: WeightSmallG, a_values: Sequence[float], samples: int = 1000,
                     seed: int = 0) -> dict[str, HessianReport]:
    """Strip floor, psh, range and support of g."""
    n = g.n
    C = assembled_C(n, a_values, g.P)
    tau = np.exp(np.asarray(g.log_tau, dtype=float))
    floor = np.concatenate([C / tau**2, [C / g.delta**2]])

    u, q = strip_samples(g.radii / 2, samples, seed, -LOG65)
    strip = [normalized_margin(h, floor) for h in g.frame_hessian(u, q)]

    # closure samples: twice the box, r from -2 c delta to 0
    u2, q2 = strip_samples(2 * g.radii, samples, seed + 7, -2 * LOG4)
    vals = g.value(u2, q2)
    Hs = g.frame_hessian(u2, q2)
    psh = [psh_margin(h) for h in Hs]
    range_m = [float(min(v, 1 - v)) for v in vals]
    outside = np.any(np.abs(u2) > g.radii, axis=-1) | (q2 < -LOG4)
    support = [float(-v) if o else 0.0 for v, o in zip(vals, outside)]
    return {
        "strip_floor": _report("S(d delta) x R(p:a/2)", strip, {"C": C}),
        "psh": _report("closure", psh),
        "range": _report("closure", range_m),
        "support": _report("closure", support),
    }


# ---------------------------------------------------------------------------
# finite differences (cross-checks)

def fd_complex_gradient(f: Callable[[np.ndarray], float], z: np.ndarray, h: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.zeros(len(z), dtype=complex)
    for i in range(len(z)):
        e = np.zeros(len(z), dtype=complex)
        e[i] = h[i]
        dx = (f(z + e) - f(z - e)) / (2 * h[i])
        dy = (f(z + 1j * e) - f(z - 1j * e)) / (2 * h[i])
        out[i] = 0.5 * (dx - 1j * dy)
    return out


def fd_complex_hessian(grad: Callable[[np.ndarray], np.ndarray], z: np.ndarray, h: np.ndarray) -> np.ndarray:
    """H[i, j] = dbar_j of the analytic holomorphic gradient component i."""
    z = np.asarray(z, dtype=complex)
    n = len(z)
    H = np.zeros((n, n), dtype=complex)
    for j in range(n):
        e = np.zeros(n, dtype=complex)
        e[j] = h[j]
        dx = (grad(z + e) - grad(z - e)) / (2 * h[j])
        dy = (grad(z + 1j * e) - grad(z - 1j * e)) / (2 * h[j])
        H[:, j] = 0.5 * (dx + 1j * dy)
    return H

"""Type stratification of a sampled neighborhood, greedy covering and the strip weight lambda."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .approx import (
    ApproxSystem, ConstantsLedger, InfeasibleScaleError, TypeSignature, local_expansion,
    stability_constants, tau, type_signature,
)
from .polycore import (
    Curve, LocalExpansion, TriangularSystem, contact_order, epsilon_prediction,
)
from .psh import (
    LOG4, LOG65, DerivativeWindow, WeightSmallG, build_weights, chi_build, derivative_windows,
    normalized_margin, polydisc_samples, assembled_C,
)


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class PointRecord:
    p: tuple[complex, ...]
    expansion: LocalExpansion
    approx: ApproxSystem
    windows: tuple[DerivativeWindow, ...]

    @property
    def log_hat(self) -> tuple[float, ...]:
        """log of a_s tau_s, the radii of the box R^(p)."""
        return tuple(w.log_a_s + t for w, t in zip(self.windows, self.approx.log_tau))

    @property
    def hat(self) -> np.ndarray:
        return np.exp(np.array(self.log_hat))

    @property
    def signature(self) -> TypeSignature:
        return type_signature(self.approx)


def analyze_point(sys: TriangularSystem, led: ConstantsLedger, p: Sequence, log_mu: float,
                  log_delta: float, strict: bool) -> PointRecord:
    exp = local_expansion(sys, p)
    ap = tau(exp, sys, led, log_mu=log_mu, log_delta=log_delta, strict=strict)
    return PointRecord(tuple(complex(x) for x in p), exp, ap, derivative_windows(exp, ap, led))


def grid_points(n: int, half_widths: Sequence[float], resolution: int) -> list[tuple[complex, ...]]:
    """Uniform grid over two real directions: (Re z1, Re z2) for n >= 2, (Re z1, Im z1) for n = 1.

    An odd resolution keeps the origin on the grid.
    """
    xs = np.linspace(-half_widths[0], half_widths[0], resolution)
    ys = np.linspace(-half_widths[1], half_widths[1], resolution)
    pts = []
    for x in xs:
        for y in ys:
            if n == 1:
                pts.append((complex(x, y),))
            else:
                pts.append((complex(x), complex(y)) + (0j,) * (n - 2))
    return pts


def origin_half_widths(rec: PointRecord, factor: float = 10.0) -> tuple[float, float]:
    """Grid half-widths around the origin: ``factor`` times the box radii there."""
    if min(rec.log_hat) + math.log(factor) < -700:
        raise ValueError("box radii at the origin underflow double precision; the grid cannot resolve them")
    hat = rec.hat
    if len(hat) == 1:
        return (factor * hat[0], factor * hat[0])
    return (factor * hat[0], factor * hat[1])


@dataclass
class Stratum:
    signature: TypeSignature
    members: list[PointRecord] = field(default_factory=list)


def stratify(records: Iterable[PointRecord]) -> list[Stratum]:
    groups: dict[TypeSignature, Stratum] = {}
    for rec in records:
        groups.setdefault(rec.signature, Stratum(rec.signature)).members.append(rec)
    return [groups[k] for k in sorted(groups, key=lambda t: repr(t.entries))]


def _coords(recs: Sequence[PointRecord]) -> np.ndarray:
    return np.array([r.p for r in recs], dtype=complex)


def _radii(recs: Sequence[PointRecord]) -> np.ndarray:
    return np.array([r.hat for r in recs], dtype=float)


@dataclass(frozen=True)
class CoverReport:
    signature: TypeSignature
    centers: tuple[PointRecord, ...]
    member_count: int
    covered_fraction: float
    max_overlap: int
    overlap_bound: int
    rho: tuple[float, ...]
    ratios_within_Q: bool
    passed: bool


def meeting_pairs(centers: Sequence[PointRecord]) -> np.ndarray:
    """Boolean matrix: polydiscs R^(p) and R^(q) intersect."""
    X, R = _coords(centers), _radii(centers)
    dist = np.abs(X[:, None, :] - X[None, :, :])
    return np.all(dist <= R[:, None, :] + R[None, :, :], axis=-1)


def overlap_bound(centers: Sequence[PointRecord], meets: np.ndarray) -> tuple[int, tuple[float, ...]]:
    """Packing bound on how many same-stratum boxes can meet one box.

    Boxes that meet have radii within a factor rho_s of each other, with
    rho_s = Q_s times the largest ratio of a_s between meeting boxes.  Their
    centres are at least a quarter box apart, so disjoint polydiscs of radius
    d'_s = 1/(8 rho_s) (in units of the reference box) fit around them inside
    a polydisc of radius D_s = 1 + 2 rho_s.
    """
    logQ = stability_constants(centers[0].approx)
    la = np.array([[w.log_a_s for w in c.windows] for c in centers])
    rho = []
    for s in range(len(logQ)):
        diff = np.abs(la[:, None, s] - la[None, :, s])
        rho.append(math.exp(logQ[s] + float(np.max(np.where(meets, diff, 0.0)))))
    bound = 1.0
    for r in rho:
        D, dp = 1 + 2 * r, 1 / (8 * r)
        bound *= ((D + dp) / dp) ** 2
    return math.ceil(bound), tuple(rho)


def greedy_cover(stratum: Stratum) -> CoverReport:
    if not stratum.members:
        raise ValueError("empty stratum")
    order = sorted(stratum.members, key=lambda r: tuple((z.real, z.imag) for z in r.p))
    X = _coords(order)
    covered = np.zeros(len(order), dtype=bool)
    centers: list[PointRecord] = []
    cX, cR = [], []
    for i, rec in enumerate(order):
        if covered[i]:
            continue
        if cX:
            quarter = np.all(np.abs(np.array(cX) - X[i]) <= 0.25 * np.array(cR), axis=-1)
            assert not quarter.any(), "new centre lies in a quarter box of an earlier one"
        centers.append(rec)
        cX.append(X[i])
        cR.append(rec.hat)
        covered |= np.all(np.abs(X - X[i]) <= 0.5 * rec.hat, axis=-1)
    meets = meeting_pairs(centers)
    overlap = int(meets.sum(axis=1).max())
    bound, rho = overlap_bound(centers, meets)
    logQ = np.array(stability_constants(order[0].approx))
    lt = np.array([c.approx.log_tau for c in centers])
    gap = np.abs(lt[:, None, :] - lt[None, :, :]) - logQ
    ratios_ok = bool(np.all(np.where(meets[..., None], gap, -1.0) <= 1e-9))
    frac = float(covered.mean())
    return CoverReport(stratum.signature, tuple(centers), len(order), frac, overlap, bound, rho,
                       ratios_ok, frac == 1.0 and overlap <= bound)


# ---------------------------------------------------------------------------
# lambda

@dataclass(frozen=True)
class LambdaReport:
    centers: int
    total_bound: int
    t_delta: float
    floor: float
    strip_min_margin: float
    max_value: float
    min_value: float
    support_max_outside: float
    sample_count: int
    passed: bool


class LambdaWeight:
    """lambda = (sum over strata and centres of g_{p_k}) / sum_T M_T."""

    def __init__(self, centers: Sequence[PointRecord], weights: Sequence[WeightSmallG], total_bound: int):
        self.centers = list(centers)
        self.weights = list(weights)
        self.total_bound = total_bound
        self._X = _coords(self.centers)
        self._R = np.array([w.radii for w in self.weights])

    def _active(self, z: np.ndarray):
        hit = np.nonzero(np.all(np.abs(self._X - z) <= self._R, axis=-1))[0]
        for k in hit:
            yield z - self._X[k], self.weights[k]

    def value(self, z: np.ndarray, q: float) -> float:
        return sum(float(w.value(u, q)) for u, w in self._active(z)) / self.total_bound

    def frame_hessian(self, z: np.ndarray, q: float) -> np.ndarray:
        n = len(z)
        H = np.zeros((n + 1, n + 1), dtype=complex)
        for u, w in self._active(z):
            H += w.frame_hessian(u, q)
        return H / self.total_bound


def assemble_lambda(covers: Sequence[CoverReport], eta: float, delta: float, all_records: Sequence[PointRecord],
                    samples: int = 1000, seed: int = 0) -> tuple[LambdaWeight, LambdaReport]:
    centers = [c for rep in covers for c in rep.centers]
    if not centers:
        raise ValueError("no centres to assemble")
    n = centers[0].approx.n
    chi = chi_build(n)
    weights = []
    for rec in centers:
        _, _, g = build_weights(rec.expansion, rec.approx, rec.windows, eta, delta, chi)
        weights.append(g)
    total = sum(rep.overlap_bound for rep in covers)
    lam = LambdaWeight(centers, weights, total)

    t_delta = max(max(r.approx.tau_values) for r in all_records)
    a_min = min(math.exp(w.log_a_s) for r in centers for w in r.windows)
    C = assembled_C(n, [a_min])
    floor_z = C / (total * t_delta**2)
    floor = np.array([floor_z] * n + [C / (total * delta**2)])

    rng_idx = np.arange(samples) % len(centers)
    margins, vals = [], []
    for k in range(len(centers)):
        cnt = int(np.sum(rng_idx == k))
        if cnt == 0:
            continue
        rec, w = centers[k], weights[k]
        u, rest = polydisc_samples(w.radii / 2, cnt, seed + k, extra=1)
        qs = -LOG65 * rest[:, 0]
        for ui, qi in zip(u, qs):
            z = np.array(rec.p) + ui
            margins.append(normalized_margin(lam.frame_hessian(z, qi), floor))
            vals.append(lam.value(z, qi))
    # outside S(c delta) every summand vanishes
    outside = []
    for k, (rec, w) in enumerate(zip(centers, weights)):
        u, rest = polydisc_samples(w.radii, 4, seed + 1000 + k, extra=1)
        for ui, ri in zip(u, rest[:, 0]):
            outside.append(lam.value(np.array(rec.p) + ui, -LOG4 * (1 + ri) - 1e-12))
    strip_min = min(margins)
    report = LambdaReport(len(centers), total, t_delta, floor_z, strip_min, max(vals), min(vals),
                          max(outside), len(margins),
                          strip_min >= -1e-9 and min(vals) >= 0 and max(vals) <= 1 and max(outside) == 0)
    return lam, report


# ---------------------------------------------------------------------------
# epsilon certificate

@dataclass(frozen=True)
class Certificate:
    log_deltas: tuple[float, ...]
    log_t: tuple[float, ...]
    slope: float
    epsilon: Fraction
    slope_ok: bool
    slope_matches: bool
    contact_order: int | float | None
    sharpness_consistent: bool | None
    failed_rungs: tuple[tuple[float, str], ...]


def max_tau(sys: TriangularSystem, led: ConstantsLedger | None, points: Sequence[Sequence], log_mu: float,
            log_delta: float, strict: bool) -> float:
    """log t_delta = log of the largest tau_s over the points."""
    best = -math.inf
    for p in points:
        ap = tau(local_expansion(sys, p), sys, led, log_mu=log_mu, log_delta=log_delta, strict=strict)
        best = max(best, max(ap.log_tau))
    return best


def epsilon_certificate(sys: TriangularSystem, led: ConstantsLedger | None, log_deltas: Sequence[float],
                        log_mu: float, points: Sequence[Sequence] | None = None, strict: bool = False,
                        curve: Curve | None = None) -> Certificate:
    """Fit log t_delta against log delta over the ladder and compare with 1/(2 m_1...m_n)."""
    if len(log_deltas) < 3:
        raise InsufficientDataError("the delta ladder needs at least 3 rungs")
    points = points or [(0,) * sys.n]
    xs, ys, failed = [], [], []
    for ld in log_deltas:
        try:
            ys.append(max_tau(sys, led, points, log_mu, ld, strict))
            xs.append(ld)
        except InfeasibleScaleError as err:
            failed.append((ld, str(err)))
    if len(xs) < 3:
        raise InsufficientDataError("fewer than 3 feasible rungs")
    slope = float(np.polyfit(np.array(xs), np.array(ys), 1)[0])
    eps = epsilon_prediction(sys).epsilon
    T = contact_order(sys, curve) if curve is not None else None
    sharp = None if T is None else (T != math.inf and eps <= Fraction(1, int(T)))
    return Certificate(tuple(xs), tuple(ys), slope, eps, slope >= float(eps) - 1e-3,
                       abs(slope - float(eps)) <= 1e-3, T, sharp, tuple(failed))

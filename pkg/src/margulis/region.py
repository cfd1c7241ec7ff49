"""Boundary of the Margulis region: the curves u_k(r) and their lower envelope b(r).

Translation length is fixed to sqrt(2), so
    u_k(r) = sqrt((1 - cos k theta) r^2 + k^2) / sqrt(E),   E = cosh(eps) - 1,
and b(r) = min_k u_k(r).  Everything that decides *which* curve is lowest is
E-free, so argmins and crossing radii are computed from
w_k(r)^2 = c_k r^2 + k^2 with c_k = 1 - cos(k theta).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import mpmath
import numpy as np

from . import kernels
from .cf_engine import DPS, CFAngle, angle_norm, curve_coefficient, curve_coefficients
from .errors import DecompositionInconsistency, PrecisionBudgetError

DEFAULT_EPSILON = 0.1
DEFAULT_WINDOW = 8
VALIDATION_SAMPLES = 1000
#: relative agreement required between a piece and the brute-force envelope
ORACLE_RTOL = 1e-12


@dataclass(frozen=True)
class RegionParams:
    angle: CFAngle
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @property
    def E(self) -> float:
        # cosh(eps) - 1 = 2 sinh^2(eps/2), free of cancellation for small eps
        s = math.sinh(self.epsilon / 2)
        return 2.0 * s * s

    @property
    def sqrt_E(self) -> float:
        return math.sqrt(self.E)


@dataclass(frozen=True)
class BoundaryCurve:
    k: int
    c_k: mpmath.mpf  # 1 - cos(k theta)


def boundary_curve(params: RegionParams, k: int) -> BoundaryCurve:
    if k < 1:
        raise ValueError("curve index must be positive")
    norm = angle_norm(params.angle, k)
    with mpmath.workdps(DPS):
        return BoundaryCurve(k, 2 * mpmath.sin(norm / 2) ** 2)


def _w(c: float, k: int, r: float) -> float:
    # the same expression the envelope kernels evaluate
    return math.sqrt(c * (r * r) + float(k) * float(k))


def curve_value(params: RegionParams, k: int, r: float) -> float:
    """u_k(r) = sqrt(c_k r^2 + k^2) / sqrt(E)."""
    if k < 1:
        raise ValueError("curve index must be positive")
    if r < 0:
        raise ValueError("r must be nonnegative")
    return _w(curve_coefficient(params.angle, k), k, r) / params.sqrt_E


# -- brute-force envelope -------------------------------------------------------


def _seed_bound(angle: CFAngle, radii: np.ndarray) -> int:
    """Largest k any radius can need: min over convergent denominators of w_q(r)."""
    if angle.is_rational:
        qs = [angle.q(n) for n in range(len(angle.terms) + 1)]
    else:
        qs = [angle.q(n) for n in range(angle.depth + 1)]
    qs = sorted(set(qs))
    cs = np.array([curve_coefficient(angle, q) for q in qs])
    qq = np.array(qs, dtype=np.float64) ** 2
    r2 = radii * radii
    best = np.full(radii.shape, np.inf)
    for c, q2 in zip(cs, qq):
        np.minimum(best, c * r2 + q2, out=best)
    return int(math.isqrt(int(math.ceil(best.max())))) + 1 if len(radii) else 1


def envelope_w2(angle: CFAngle, radii) -> tuple[np.ndarray, np.ndarray]:
    """Brute-force min over k >= 1 of c_k r^2 + k^2, with the smallest minimizing k."""
    radii = np.ascontiguousarray(np.asarray(radii, dtype=np.float64).ravel())
    if np.any(radii < 0) or not np.all(np.isfinite(radii)):
        raise ValueError("radii must be finite and nonnegative")
    w2 = np.empty(radii.shape)
    ks = np.empty(radii.shape, dtype=np.int64)
    k_max = _seed_bound(angle, radii)
    while True:
        c = curve_coefficients(angle, k_max)
        need = kernels.envelope_many(c, radii, w2, ks)
        if need == 0:
            return w2, ks
        k_max = 2 * need  # seed bound is an upper bound; kept for safety


def envelope_value(params: RegionParams, r: float) -> tuple[float, int]:
    """(b(r), smallest k with u_k(r) = b(r)) by complete brute-force scan.

    u_k(r) >= k/sqrt(E), so no k beyond sqrt(E) * (running best) can win; the
    scan stops there.
    """
    w2, ks = envelope_w2(params.angle, [r])
    return math.sqrt(w2[0]) / params.sqrt_E, int(ks[0])


def envelope_values(params: RegionParams, radii) -> tuple[np.ndarray, np.ndarray]:
    w2, ks = envelope_w2(params.angle, radii)
    return np.sqrt(w2) / params.sqrt_E, ks


# -- crossings ------------------------------------------------------------------


def _crossing(c_k: float, k: int, c_m: float, m: int) -> float | None:
    if not c_m < c_k:
        return None
    r0 = math.sqrt((m * m - k * k) / (c_k - c_m))
    tol = 1e-9 * (1.0 + r0)

    def f(r):
        return _w(c_k, k, r) - _w(c_m, m, r)

    lo, hi = max(r0 - tol, 0.0), r0 + tol
    if f(lo) <= 0 <= f(hi):
        return r0
    # closed form lost accuracy: bisect on a wider bracket
    lo, hi = r0 / 2, 2 * r0 + 1
    while f(lo) > 0:
        lo /= 2
    while f(hi) < 0:
        hi *= 2
    while hi - lo > 1e-9 * (1.0 + lo):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def intersection_radius(params: RegionParams, k: int, m: int) -> float | None:
    """r where u_k and u_m meet (m > k), or None when cos(m theta) <= cos(k theta)."""
    if not m > k >= 1:
        raise ValueError("need m > k >= 1")
    angle = params.angle
    return _crossing(curve_coefficient(angle, k), k, curve_coefficient(angle, m), m)


def _check_index(angle: CFAngle, n: int) -> None:
    limit = len(angle.terms) if angle.is_rational else angle.depth
    if n > limit:
        raise PrecisionBudgetError(f"convergent index {n} exceeds working depth {limit}")


def successor_intersection(params: RegionParams, n: int) -> float:
    """Crossing radius of v_n = u_{q_n} and v_{n+2} = u_{q_{n+2}}."""
    angle = params.angle
    if n < 0:
        raise ValueError("index must be nonnegative")
    _check_index(angle, n + 2)
    r = intersection_radius(params, angle.q(n), angle.q(n + 2))
    if r is None:
        raise PrecisionBudgetError(f"v_{n} and v_{n + 2} do not cross; norms not decreasing")
    return r


class ConstituentResult(NamedTuple):
    constituent: bool
    witness: tuple[int, int] | None
    window: tuple[int, int]

    def __bool__(self):
        return self.constituent


def is_constituent(params: RegionParams, n: int, window: int = DEFAULT_WINDOW,
                   top: int | None = None) -> ConstituentResult:
    """Window test for whether v_n is a piece of b.

    v_n is excluded iff some k < n < m has crossing(v_k, v_n) >= crossing(v_n, v_m).
    Only k in [n - window, n) and m in (n, min(n + window, top)] are searched,
    and indices sharing the denominator q_n are skipped, so a True answer is
    relative to that window.
    """
    angle = params.angle
    top = (len(angle.terms) if angle.is_rational else angle.depth) if top is None else top
    if n < 0 or n > top:
        raise PrecisionBudgetError(f"index {n} outside working range [0, {top}]")
    lo, hi = max(0, n - window), min(top, n + window)
    qn = angle.q(n)
    left = []
    for k in range(lo, n):
        qk = angle.q(k)
        if qk < qn:
            left.append((k, intersection_radius(params, qk, qn)))
    right = []
    for m in range(n + 1, hi + 1):
        qm = angle.q(m)
        if qm > qn:
            right.append((m, intersection_radius(params, qn, qm)))
    for k, rk in left:
        if rk is None:
            continue
        for m, rm in right:
            if rm is not None and rk >= rm:
                return ConstituentResult(False, (k, m), (lo, hi))
    return ConstituentResult(True, None, (lo, hi))


# -- decomposition ----------------------------------------------------------------


@dataclass
class PieceDecomposition:
    """b(r) = u_{indices[m]}(r) on [breakpoints[m], breakpoints[m+1]); last end is r_max."""

    indices: list[int]
    breakpoints: list[float]
    r_max: float
    validation: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.breakpoints) != len(self.indices) + 1:
            raise ValueError("need one more breakpoint than pieces")
        if self.breakpoints[0] != 0.0:
            raise ValueError("first breakpoint must be 0")
        if any(a >= b for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("indices must be strictly increasing")
        if any(a >= b for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if self.breakpoints[-1] != self.r_max:
            raise ValueError("last breakpoint must equal r_max")

    def active_index(self, r: float) -> int:
        i = bisect.bisect_right(self.breakpoints, r) - 1
        return self.indices[min(max(i, 0), len(self.indices) - 1)]

    def value(self, params: RegionParams, r: float) -> float:
        return curve_value(params, self.active_index(r), r)

    @property
    def pieces(self) -> list[tuple[int, float, float]]:
        return [(k, self.breakpoints[i], self.breakpoints[i + 1])
                for i, k in enumerate(self.indices)]

    def to_dict(self) -> dict:
        return {"indices": list(self.indices), "breakpoints": list(self.breakpoints),
                "r_max": self.r_max, "validation": dict(self.validation)}

    @classmethod
    def from_dict(cls, data: dict) -> PieceDecomposition:
        return cls([int(k) for k in data["indices"]],
                   [float(r) for r in data["breakpoints"]], float(data["r_max"]),
                   dict(data.get("validation", {})))


def _distinct_indices(angle: CFAngle, top: int) -> list[int]:
    """Convergent indices 0..top, keeping the last of any run with equal q."""
    out = []
    for n in range(top + 1):
        if out and angle.q(out[-1]) == angle.q(n):
            out[-1] = n
        else:
            out.append(n)
    return out


def candidate_depth(params: RegionParams, r_max: float) -> int:
    """Smallest n with successor_intersection(n - 2) > r_max, plus two guard indices."""
    angle = params.angle
    if angle.is_rational:
        return len(angle.terms)
    n = 2
    while True:
        _check_index(angle, n)
        if successor_intersection(params, n - 2) > r_max:
            break
        n += 1
    depth = n + 2
    _check_index(angle, depth)
    return depth


def decompose(params: RegionParams, r_max: float, window: int = DEFAULT_WINDOW,
              samples: int = VALIDATION_SAMPLES) -> PieceDecomposition:
    """Piece structure of b on [0, r_max].

    Candidates are convergent denominators; each is filtered with
    is_constituent, breakpoints are crossings of consecutive survivors, and
    the result is checked against the brute-force envelope at ``samples``
    geometrically spaced radii.  Disagreement raises DecompositionInconsistency.
    """
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    angle = params.angle
    n_cand = candidate_depth(params, r_max)
    top = len(angle.terms) if angle.is_rational else min(n_cand + window, angle.depth)
    survivors = [n for n in _distinct_indices(angle, n_cand)
                 if is_constituent(params, n, window, top)]
    ks = [angle.q(n) for n in survivors]
    if angle.is_rational and angle.exact == 0:
        ks = [1]
    if ks[0] != 1:
        raise DecompositionInconsistency(f"first piece is u_{ks[0]}, expected u_1")

    indices, breaks = [ks[0]], [0.0]
    for k, m in zip(ks, ks[1:]):
        r = intersection_radius(params, k, m)
        if r is None:
            raise DecompositionInconsistency(f"consecutive pieces u_{k}, u_{m} do not cross")
        if r >= r_max:
            break
        if r <= breaks[-1]:
            # zero-length activity: an isolated touch, not a constituent
            raise DecompositionInconsistency(
                f"breakpoint {r!r} for u_{m} does not follow {breaks[-1]!r}")
        indices.append(m)
        breaks.append(r)
    breaks.append(float(r_max))
    decomposition = PieceDecomposition(indices, breaks, float(r_max))
    decomposition.validation = validate(params, decomposition, samples)
    return decomposition


def validate(params: RegionParams, decomposition: PieceDecomposition,
             samples: int = VALIDATION_SAMPLES, radii=None) -> dict:
    """Compare the active piece against the brute-force envelope.

    An index mismatch is tolerated only as a tie: within 1e-9 (1 + r) of a
    breakpoint, or with values agreeing to ORACLE_RTOL.
    """
    angle = params.angle
    if radii is None:
        r_max = decomposition.r_max
        radii = np.concatenate([[0.0], np.geomspace(min(1e-3, r_max / 10), r_max, samples)])
    radii = np.asarray(radii, dtype=np.float64)
    w2, argmin = envelope_w2(angle, radii)
    max_residual = 0.0
    mismatches = []
    interior = decomposition.breakpoints[1:-1]
    for r, best, k_star in zip(radii.tolist(), w2.tolist(), argmin.tolist()):
        k = decomposition.active_index(r)
        piece = _w(curve_coefficient(angle, k), k, r) ** 2
        residual = abs(math.sqrt(piece) - math.sqrt(best)) / math.sqrt(best)
        max_residual = max(max_residual, residual)
        if k == k_star:
            continue
        near = any(abs(r - b) <= 1e-9 * (1 + r) for b in interior)
        if not (near or residual <= ORACLE_RTOL):
            mismatches.append({"r": r, "piece": k, "argmin": int(k_star)})
    report = {"oracle_checks": int(len(radii)), "max_residual": max_residual,
              "mismatches": len(mismatches)}
    if mismatches:
        raise DecompositionInconsistency(
            f"{len(mismatches)} of {len(radii)} radii disagree with the brute-force"
            f" envelope, first {mismatches[0]}")
    return report


# -- asymptotics ------------------------------------------------------------------


class Comparability(NamedTuple):
    inf_ratio: float
    sup_ratio: float


def comparability_report(params: RegionParams, r_lo: float, r_hi: float,
                         samples: int) -> Comparability:
    """Extremes of b(r)/sqrt(r) over a geometric grid on [r_lo, r_hi]."""
    if r_lo < 1 or not r_hi > r_lo:
        raise ValueError("need 1 <= r_lo < r_hi")
    radii = np.geomspace(r_lo, r_hi, samples)
    b, _ = envelope_values(params, radii)
    ratio = b / np.sqrt(radii)
    return Comparability(float(ratio.min()), float(ratio.max()))


def rational_tail(params: RegionParams, l: int) -> float:
    """Eventual height l/sqrt(E) of b for a rational rotation of exact order l."""
    angle = params.angle
    if not angle.is_rational:
        raise ValueError("rational_tail needs a rational rotation")
    order = angle.exact.denominator
    if l != order:
        raise ValueError(f"{l} is not the exact order {order} of the rotation")
    return l / params.sqrt_E


def rotation_order(angle: CFAngle) -> int:
    if not angle.is_rational:
        raise ValueError("irrational rotation has infinite order")
    return Fraction(angle.exact).denominator

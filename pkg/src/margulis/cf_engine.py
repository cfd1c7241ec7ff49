"""Exact continued-fraction arithmetic for a rotation angle.

The angle theta is carried as x = theta / 2pi, normalized into (0, 1) so that
a_0 = 0.  All evaluations of k*x mod 1 go through an exact rational surrogate
p_N/q_N whose distance from x is certified, so the only floating error is a
final rounding.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import mpmath
import numpy as np

from .errors import AngleSpecError, PrecisionBudgetError

#: certified error on ||k x|| must stay below this fraction of ||k x||
NORM_TOLERANCE = Fraction(1, 10**15)
GUARD_MARGIN = 10
DEFAULT_DEPTH = 30
#: every k up to this bound is certified for unbounded coefficient supplies
COVERED_K = 10**8
#: working precision (decimal digits) for high-precision reals
DPS = 50
#: decimal inputs shorter than this cannot back a depth >= DECIMAL_DEPTH_FLOOR
DECIMAL_MIN_DIGITS = 16
DECIMAL_DEPTH_FLOOR = 20


class _Convergents:
    """Growable table of p_n, q_n, stored with an offset of 2 (index -2 first)."""

    def __init__(self, coefficient):
        self._coefficient = coefficient
        self.p = [0, 1]
        self.q = [1, 0]

    def extend_to(self, n: int) -> None:
        while len(self.q) - 2 <= n:
            m = len(self.q) - 2  # index being added
            a = 0 if m == 0 else self._coefficient(m)
            self.p.append(a * self.p[-1] + self.p[-2])
            self.q.append(a * self.q[-1] + self.q[-2])


@dataclass(frozen=True)
class CFAngle:
    """An angle x = theta/2pi in (0, 1) given by continued-fraction coefficients.

    ``terms`` are the leading coefficients a_1, a_2, ...; when ``period`` is
    non-empty the expansion continues by repeating it forever, otherwise the
    supply of coefficients is finite.  A finite supply is either an exact
    rational angle (``exact`` is set) or a truncated decimal input
    (``uncertainty`` bounds the distance to the intended irrational).
    """

    terms: tuple[int, ...]
    period: tuple[int, ...] = ()
    depth: int = DEFAULT_DEPTH
    guard_depth: int = DEFAULT_DEPTH + GUARD_MARGIN
    bound_D: int = 0
    exact: Fraction | None = None
    uncertainty: Fraction = Fraction(0)
    reference: Fraction | None = None
    source: str = field(default="", compare=False)

    def __post_init__(self):
        for a in self.terms + self.period:
            if a < 1:
                raise AngleSpecError(f"coefficient {a} is not a positive integer")
        observed = max(self.terms + self.period, default=1)
        if self.bound_D == 0:
            object.__setattr__(self, "bound_D", observed)
        elif self.bound_D < observed:
            raise AngleSpecError(
                f"declared bound D={self.bound_D} is below observed coefficient {observed}"
            )
        if self.exact is not None:
            if not 0 <= self.exact < 1:
                raise AngleSpecError("rational angle must lie in [0, 1)")
            return
        if not self.terms and not self.period:
            raise AngleSpecError("empty coefficient list")
        if self.depth < 1:
            raise AngleSpecError("working depth must be positive")
        if self.guard_depth < self.depth + GUARD_MARGIN:
            raise PrecisionBudgetError(
                f"guard depth {self.guard_depth} is below working depth + {GUARD_MARGIN}"
                f" = {self.depth + GUARD_MARGIN}"
            )
        if not self.period and self.guard_depth > len(self.terms):
            raise PrecisionBudgetError(
                f"only {len(self.terms)} trustworthy coefficients available; guard depth"
                f" {self.guard_depth} needs more (supply more digits or lower --depth)"
            )

    # -- constructors -------------------------------------------------------

    @classmethod
    def periodic(cls, period: Sequence[int], preperiod: Sequence[int] = (),
                 depth: int = DEFAULT_DEPTH, guard_depth: int | None = None,
                 bound_D: int = 0, source: str = "") -> CFAngle:
        if not period:
            raise AngleSpecError("empty period")
        return cls(tuple(int(a) for a in preperiod), tuple(int(a) for a in period),
                   depth, depth + GUARD_MARGIN if guard_depth is None else guard_depth,
                   bound_D, source=source)

    @classmethod
    def explicit(cls, coefficients: Sequence[int], depth: int | None = None,
                 guard_depth: int | None = None, bound_D: int = 0,
                 source: str = "") -> CFAngle:
        """Coefficients a_1.. given as a list; the list repeats past its end."""
        coefficients = tuple(int(a) for a in coefficients)
        if not coefficients:
            raise AngleSpecError("empty coefficient list")
        depth = len(coefficients) if depth is None else depth
        return cls.periodic(coefficients, (), depth, guard_depth, bound_D, source)

    @classmethod
    def rational(cls, numerator: int, denominator: int, source: str = "") -> CFAngle:
        if denominator <= 0:
            raise AngleSpecError("rational angle needs a positive denominator")
        x = Fraction(numerator, denominator) % 1
        terms = tuple(_expand(x))
        return cls(terms, (), len(terms), len(terms), 0, exact=x, source=source)

    @classmethod
    def from_decimal(cls, text: str, depth: int = DEFAULT_DEPTH,
                     guard_depth: int | None = None, bound_D: int = 0) -> CFAngle:
        text = text.strip()
        try:
            value = Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise AngleSpecError(f"not a decimal number: {text!r}") from None
        digits = re.sub(r"[^0-9]", "", text.split("e")[0].split("E")[0]).lstrip("0")
        if len(digits) < DECIMAL_MIN_DIGITS and depth >= DECIMAL_DEPTH_FLOOR:
            raise AngleSpecError(
                f"decimal has {len(digits)} significant digits; depth {depth} needs at"
                f" least {DECIMAL_MIN_DIGITS}"
            )
        x = value % 1
        if x == 0:
            raise AngleSpecError("decimal angle is an integer multiple of 2pi")
        scale = 10 ** len(text.split(".")[1]) if "." in text else 1
        terms = tuple(_expand(x, max_denominator=math.isqrt(scale)))
        if not terms:
            raise AngleSpecError(f"decimal {text!r} carries no trustworthy coefficient")
        return cls(terms, (), depth, depth + GUARD_MARGIN if guard_depth is None else guard_depth,
                   bound_D, uncertainty=Fraction(1, 2 * scale), reference=x, source=text)

    # -- coefficient access -------------------------------------------------

    @property
    def is_rational(self) -> bool:
        return self.exact is not None

    @property
    def supply(self) -> int | None:
        """Number of available coefficients, or None when unbounded."""
        return None if self.period else len(self.terms)

    def coefficient(self, n: int) -> int:
        """a_n for n >= 1 (a_0 is always 0)."""
        if n == 0:
            return 0
        if n < 0:
            raise IndexError(n)
        if n <= len(self.terms):
            return self.terms[n - 1]
        if not self.period:
            raise PrecisionBudgetError(f"coefficient a_{n} is beyond the available supply")
        return self.period[(n - 1 - len(self.terms)) % len(self.period)]

    @property
    def coefficients(self) -> tuple[int, ...]:
        """a_1, ..., a_depth."""
        return tuple(self.coefficient(n) for n in range(1, self.depth + 1))

    @cached_property
    def _table(self) -> _Convergents:
        return _Convergents(self.coefficient)

    def p(self, n: int) -> int:
        self._table.extend_to(n)
        return self._table.p[n + 2]

    def q(self, n: int) -> int:
        self._table.extend_to(n)
        return self._table.q[n + 2]

    # -- surrogate ----------------------------------------------------------

    @cached_property
    def surrogate_depth(self) -> int:
        """Index N of the rational surrogate p_N/q_N actually used.

        For an unbounded supply this is the smallest N >= guard_depth whose
        certified error keeps ||k x|| within NORM_TOLERANCE for every
        k <= max(q_{depth+2}, COVERED_K); otherwise it is the deepest
        available index.
        """
        if self.period:
            cover = max(self.q(self.depth + 2), COVERED_K)
            m = 0
            while self.q(m) <= cover:
                m += 1
            # min ||kx|| over k <= cover is >= 1 / (2 q_m)
            need = 2 * cover * self.q(m)
            n = self.guard_depth
            while self.q(n) * self.q(n + 1) * NORM_TOLERANCE < need:
                n += 1
            return n
        return len(self.terms)

    @cached_property
    def surrogate(self) -> Fraction:
        if self.exact is not None:
            return self.exact
        n = self.surrogate_depth
        return Fraction(self.p(n), self.q(n))

    @cached_property
    def guard_error(self) -> Fraction:
        """Certified bound on |x - surrogate|."""
        if self.exact is not None:
            return Fraction(0)
        n = self.surrogate_depth
        if self.period:
            return Fraction(1, self.q(n) * self.q(n + 1))
        reference = self.surrogate if self.reference is None else self.reference
        return abs(reference - self.surrogate) + self.uncertainty

    def residue(self, k: int) -> tuple[int, int]:
        """(m, Q) with ||k * surrogate|| = m / Q exactly."""
        P, Q = self.surrogate.numerator, self.surrogate.denominator
        m = (k * P) % Q
        return min(m, Q - m), Q

    def check_budget(self, k_max: int) -> None:
        """Raise PrecisionBudgetError unless ||k x|| is certified for all k <= k_max."""
        if self.exact is not None or k_max <= 0:
            return
        g = self.guard_error
        if g == 0:
            return
        n_sur = self.surrogate_depth
        Q = self.q(n_sur)
        if k_max >= Q:
            raise PrecisionBudgetError(
                f"k = {k_max} reaches the surrogate denominator; raise the guard depth"
            )
        # the smallest norm over 1..k_max is attained at the largest q_n <= k_max
        n = 0
        while self.q(n + 1) <= k_max:
            n += 1
        m, _ = self.residue(self.q(n))
        err = k_max * g
        if err > NORM_TOLERANCE * (Fraction(m, Q) - err):
            raise PrecisionBudgetError(
                f"certified error {float(err):.3g} on ||k x|| for k <= {k_max} exceeds"
                f" relative tolerance {float(NORM_TOLERANCE):.0e}; raise the guard depth"
            )

    def describe(self) -> dict:
        out = {"source": self.source, "depth": self.depth, "bound_D": self.bound_D}
        if self.exact is not None:
            out["rational"] = f"{self.exact.numerator}/{self.exact.denominator}"
        else:
            out["coefficients"] = list(self.coefficients)
            out["guard_depth"] = self.guard_depth
            out["surrogate_depth"] = self.surrogate_depth
        return out

    @cached_property
    def _c_cache(self) -> dict:
        return {"c": np.zeros(1)}


def _expand(x: Fraction, max_denominator: int | None = None) -> list[int]:
    """Coefficients a_1, a_2, ... of x in [0, 1).

    With ``max_denominator`` the expansion stops before a convergent
    denominator exceeds it; beyond that point coefficients of a truncated
    decimal are artifacts of the truncation.
    """
    out: list[int] = []
    q_prev, q = 0, 1  # q_{-1}, q_0
    while x != 0:
        y = 1 / x
        a = math.floor(y)
        q_next = a * q + q_prev
        if max_denominator is not None and q_next > max_denominator:
            break
        out.append(a)
        q_prev, q = q, q_next
        x = y - a
    return out


def _value(terms: Sequence[int]) -> Fraction:
    x = Fraction(0)
    for a in reversed(terms):
        x = 1 / (a + x)
    return x


_PERIODIC = re.compile(
    r"^pre:\[(?P<pre>[^\]]*)\];per:(?:\[(?P<per>[^\]]*)\]|none)"
    r"(?:;rat:(?P<num>-?\d+)/(?P<den>\d+))?$"
)
_RATIONAL = re.compile(r"^rat:(?P<num>-?\d+)/(?P<den>\d+)$")
_DECIMAL = re.compile(r"^[+-]?\d*\.\d+(?:[eE][+-]?\d+)?$")


def _int_list(text: str) -> list[int]:
    text = text.strip().rstrip("…").rstrip(".").strip().rstrip(",")
    if not text:
        return []
    try:
        values = [int(t) for t in text.split(",")]
    except ValueError:
        raise AngleSpecError(f"not a coefficient list: {text!r}") from None
    for a in values:
        if a < 1:
            raise AngleSpecError(f"coefficient {a} is not a positive integer")
    return values


def parse_angle(spec, depth: int | None = None, guard_depth: int | None = None,
                bound_D: int = 0) -> CFAngle:
    """Build a CFAngle from a specification.

    ``spec`` may be a sequence of coefficients (repeated past its end), or a
    string in one of the forms ``"1,2,3"`` (optionally ending in ``,...``),
    ``"pre:[1,2];per:[1]"``, ``"pre:[];per:none;rat:1/3"``, ``"rat:1/3"`` or a
    decimal such as ``"0.6180339887498949"``.
    """
    if not isinstance(spec, str):
        return CFAngle.explicit(list(spec), depth, guard_depth, bound_D,
                                source=",".join(str(a) for a in spec))
    text = spec.strip()
    if m := _RATIONAL.match(text):
        return CFAngle.rational(int(m["num"]), int(m["den"]), source=text)
    if m := _PERIODIC.match(text.replace(" ", "")):
        if m["num"] is not None:
            return CFAngle.rational(int(m["num"]), int(m["den"]), source=text)
        pre = _int_list(m["pre"])
        if m["per"] is None:
            if not pre:
                raise AngleSpecError("empty coefficient list")
            x = _value(pre)
            return CFAngle.rational(x.numerator, x.denominator, source=text)
        per = _int_list(m["per"])
        if not per:
            raise AngleSpecError("empty period")
        return CFAngle.periodic(per, pre, DEFAULT_DEPTH if depth is None else depth,
                                guard_depth, bound_D, source=text)
    if _DECIMAL.match(text):
        return CFAngle.from_decimal(text, DEFAULT_DEPTH if depth is None else depth,
                                    guard_depth, bound_D)
    if not text:
        raise AngleSpecError("empty coefficient list")
    coefficients = _int_list(text)
    if not coefficients:
        raise AngleSpecError("empty coefficient list")
    return CFAngle.explicit(coefficients, depth, guard_depth, bound_D, source=text)


# -- convergents and norms ----------------------------------------------------


@dataclass(frozen=True)
class Convergent:
    n: int
    p: int
    q: int
    delta: mpmath.mpf
    guard_error: float

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


def _mpf(value: Fraction) -> mpmath.mpf:
    with mpmath.workdps(DPS):
        return mpmath.mpf(value.numerator) / value.denominator


def convergent(angle: CFAngle, n: int) -> Convergent:
    if n < -2:
        raise ValueError("convergent index must be >= -2")
    limit = angle.depth if not angle.is_rational else len(angle.terms)
    if n > limit:
        raise PrecisionBudgetError(f"convergent {n} exceeds working depth {limit}")
    p, q = angle.p(n), angle.q(n)
    delta = abs(q * angle.surrogate - p)
    return Convergent(n, p, q, _mpf(delta), float(q * angle.guard_error))


def convergents(angle: CFAngle, n_max: int) -> list[Convergent]:
    """Convergents n = 0..n_max with exact p_n, q_n and delta_n = |q_n x - p_n|."""
    return [convergent(angle, n) for n in range(n_max + 1)]


def denominators(angle: CFAngle, n_max: int | None = None) -> list[int]:
    """q_0..q_{n_max} (defaults to the working depth)."""
    n_max = angle.depth if n_max is None else n_max
    if angle.is_rational:
        n_max = min(n_max, len(angle.terms))
    return [angle.q(n) for n in range(n_max + 1)]


def angle_norm(angle: CFAngle, k: int) -> mpmath.mpf:
    """||k theta|| = 2 pi min(frac(kx), 1 - frac(kx)), as a high-precision real."""
    if k == 0:
        raise ValueError("angle_norm is undefined for k = 0")
    k = abs(k)
    angle.check_budget(k)
    m, Q = angle.residue(k)
    with mpmath.workdps(DPS):
        return 2 * mpmath.pi * mpmath.mpf(m) / Q


def curve_coefficient(angle: CFAngle, k: int) -> float:
    """1 - cos(k theta) as a double, computed as 2 sin^2(pi ||kx||) without cancellation."""
    angle.check_budget(abs(k))
    m, Q = angle.residue(k)
    s = math.sin(math.pi * (m / Q))
    return 2.0 * s * s


def curve_coefficients(angle: CFAngle, k_max: int) -> np.ndarray:
    """Array c with c[k] = 1 - cos(k theta) for 0 <= k <= k_max (memoized per angle)."""
    cache = angle._c_cache
    c = cache["c"]
    if len(c) <= k_max:
        angle.check_budget(k_max)
        P, Q = angle.surrogate.numerator, angle.surrogate.denominator
        start = len(c)
        size = max(k_max + 1, 2 * start)
        new = np.empty(size - start)
        sin, pi = math.sin, math.pi
        for i, k in enumerate(range(start, size)):
            m = (k * P) % Q
            s = sin(pi * (min(m, Q - m) / Q))
            new[i] = 2.0 * s * s
        c = np.concatenate([c, new])
        cache["c"] = c
    return c


def closest_returns(angle: CFAngle, K: int) -> list[int]:
    """All q in 1..K with ||q theta|| < ||k theta|| for every 0 < k < q (brute force)."""
    if K < 1:
        raise ValueError("K must be positive")
    angle.check_budget(K)
    P, Q = angle.surrogate.numerator, angle.surrogate.denominator
    best = Q  # strictly above any norm numerator
    out = []
    m = 0
    for k in range(1, K + 1):
        m += P
        if m >= Q:
            m -= Q
        norm = m if 2 * m <= Q else Q - m
        if norm < best:
            best = norm
            out.append(k)
    return out


# -- verification -------------------------------------------------------------


@dataclass
class NormRecursionReport:
    depth: int
    rows: list[dict]
    max_residual: float = 0.0
    max_relative_residual: float = 0.0
    passed: bool = True

    def to_dict(self) -> dict:
        return {"depth": self.depth, "max_residual": self.max_residual,
                "max_relative_residual": self.max_relative_residual,
                "passed": self.passed, "rows": self.rows}


def verify_norm_recursion(angle: CFAngle, depth: int,
                          rel_tol: float = 1e-12) -> NormRecursionReport:
    """Check the closest-return norm facts for n = 1..depth.

    For each n: 0 < ||q_{n+1}θ|| < ||q_nθ||, the recursion
    ||q_nθ|| = a_{n+2} ||q_{n+1}θ|| + ||q_{n+2}θ|| (residual relative to
    ||q_nθ||), and pi/q_{n+1} < ||q_nθ|| < 2pi/q_{n+1}.
    """
    if depth + 2 > angle.depth:
        raise PrecisionBudgetError(f"depth {depth} + 2 exceeds working depth {angle.depth}")
    report = NormRecursionReport(depth, [])
    if depth <= 0:
        return report
    norms = {n: angle_norm(angle, angle.q(n)) for n in range(1, depth + 3)}
    with mpmath.workdps(DPS):
        for n in range(1, depth + 1):
            a = angle.coefficient(n + 2)
            residual = abs(norms[n] - a * norms[n + 1] - norms[n + 2])
            relative = residual / norms[n]
            decreasing = bool(0 < norms[n + 1] < norms[n])
            q1 = angle.q(n + 1)
            bounds = bool(mpmath.pi / q1 < norms[n] < 2 * mpmath.pi / q1)
            ok = decreasing and bounds and relative < rel_tol
            report.rows.append({"n": n, "q": angle.q(n), "norm": float(norms[n]),
                                "residual": float(residual),
                                "relative_residual": float(relative),
                                "decreasing": decreasing, "bounds": bounds, "passed": ok})
            report.max_residual = max(report.max_residual, float(residual))
            report.max_relative_residual = max(report.max_relative_residual, float(relative))
            report.passed &= ok
    return report


def verify_denominator_recursion(angle: CFAngle) -> bool:
    """q_{n+1} = a_{n+1} q_n + q_{n-1} exactly and q_n < q_{n+1} for 1 <= n < depth."""
    ok = angle.q(-2) == 1 and angle.q(-1) == 0
    for n in range(-1, angle.depth):
        ok &= angle.q(n + 1) == angle.coefficient(n + 1) * angle.q(n) + angle.q(n - 1)
    for n in range(1, angle.depth):
        ok &= 0 < angle.q(n) < angle.q(n + 1)
    return bool(ok)


def verify_growth_bounds(angle: CFAngle) -> bool:
    """q_n < q_{n+k} < (D+1)^k q_n for all n, k within the working depth.

    The upper bound needs q_{n-1} < q_n, so n = 1 is skipped when a_1 = 1.
    """
    D = angle.bound_D
    start = 1 if angle.q(0) < angle.q(1) else 2
    for n in range(start, angle.depth):
        for k in range(1, angle.depth - n + 1):
            if not angle.q(n) < angle.q(n + k) < (D + 1) ** k * angle.q(n):
                return False
    return True

"""Upper half-space geometry of H^4 and sampled distortion certificates.

Points are (x, y, z, u) with u > 0; r = sqrt(x^2 + y^2) is the distance from
the rotation axis of the screw parabolic g.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .cf_engine import curve_coefficients
from .region import RegionParams, envelope_values

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Point4:
    x: float
    y: float
    z: float
    u: float

    def __post_init__(self):
        if not (self.u > 0 and math.isfinite(self.u)):
            raise ValueError(f"u must be positive and finite, got {self.u}")

    @property
    def r(self) -> float:
        return math.hypot(self.x, self.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.u])


def _sq_sep(P: Point4, Q: Point4) -> float:
    return (P.x - Q.x) ** 2 + (P.y - Q.y) ** 2 + (P.z - Q.z) ** 2 + (P.u - Q.u) ** 2


def dist(P: Point4, Q: Point4) -> float:
    """Hyperbolic distance, 2 asinh(|P - Q| / (2 sqrt(u_P u_Q)))."""
    sep = math.hypot(P.x - Q.x, P.y - Q.y, P.z - Q.z, P.u - Q.u)
    return 2.0 * math.asinh(sep / (2.0 * math.sqrt(P.u) * math.sqrt(Q.u)))


def cosh_dist(P: Point4, Q: Point4) -> float:
    """cosh of the distance, 1 + |P - Q|^2 / (2 u_P u_Q); cross-check only."""
    return 1.0 + _sq_sep(P, Q) / (2.0 * P.u * Q.u)


def dist_arrays(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Row-wise distance between (n, 4) arrays of points."""
    sep = np.sqrt(np.sum((P - Q) ** 2, axis=-1))
    return 2.0 * np.arcsinh(sep / (2.0 * np.sqrt(P[..., 3] * Q[..., 3])))


# -- the screw parabolic ----------------------------------------------------------


def rotation(params: RegionParams, k: int) -> tuple[float, float]:
    """(cos k theta, sin k theta) with k x reduced mod 1 exactly on the surrogate."""
    angle = params.angle
    angle.check_budget(abs(k))
    P, Q = angle.surrogate.numerator, angle.surrogate.denominator
    m = (k * P) % Q
    if 2 * m > Q:
        m -= Q
    phi = 2.0 * math.pi * (m / Q)
    return math.cos(phi), math.sin(phi)


def screw_apply(params: RegionParams, k: int, P: Point4) -> Point4:
    """g^k(P): rotate by k theta about the z-axis, translate k sqrt(2) along it."""
    if k == 0:
        return P
    c, s = rotation(params, k)
    return Point4(P.x * c - P.y * s, P.x * s + P.y * c, P.z + k * SQRT2, P.u)


def in_margulis_region(params: RegionParams, P: Point4, k_max: int | None = None) -> bool:
    """True iff E u^2 >= (1 - cos k theta) r^2 + k^2 for some 1 <= k <= k_max.

    k^2 <= E u^2 is necessary, so k_max >= ceil(sqrt(E) u) makes the test complete.
    """
    needed = math.ceil(params.sqrt_E * P.u)
    if k_max is None:
        k_max = needed
    elif k_max < needed:
        raise ValueError(f"k_max={k_max} below the complete bound {needed}")
    if k_max < 1:
        return False
    c = curve_coefficients(params.angle, k_max)[1:k_max + 1]
    k = np.arange(1, k_max + 1, dtype=np.float64)
    r = P.r
    return bool(np.any(c * (r * r) + k * k <= params.E * P.u * P.u))


# -- the model region S_a and the maps h, f -------------------------------------------


def profile_a(r):
    """a(r) = sqrt((sqrt(4 r^2 + 1) + 1) / 2); accepts scalars or arrays."""
    return np.sqrt((np.sqrt(4.0 * np.square(r) + 1.0) + 1.0) / 2.0)


def profile_s(r):
    """s_r = sqrt((sqrt(4 r^2 + 1) - 1) / 2), written to avoid cancellation at small r."""
    r2 = np.square(r)
    return np.sqrt(2.0 * r2 / (np.sqrt(4.0 * r2 + 1.0) + 1.0))


def map_h(P: Point4) -> Point4:
    lam = math.sqrt(P.x * P.x + P.y * P.y + P.u * P.u)
    return Point4(lam * P.x, lam * P.y, lam * P.z, lam * P.u)


def map_h_arrays(P: np.ndarray) -> np.ndarray:
    lam = np.sqrt(P[:, 0] ** 2 + P[:, 1] ** 2 + P[:, 3] ** 2)
    return P * lam[:, None]


def b_over_a(params: RegionParams, radii) -> np.ndarray:
    radii = np.asarray(radii, dtype=np.float64)
    b, _ = envelope_values(params, radii.ravel())
    return (b / profile_a(radii.ravel())).reshape(radii.shape)


def map_f(params: RegionParams, P: Point4) -> Point4:
    """(x, y, z, u) -> (x, y, z, u b(r)/a(r)); carries the boundary of S_a onto that of T_g."""
    scale = float(b_over_a(params, [P.r])[0])
    return Point4(P.x, P.y, P.z, P.u * scale)


def map_f_arrays(params: RegionParams, P: np.ndarray) -> np.ndarray:
    out = P.copy()
    out[:, 3] *= b_over_a(params, np.hypot(P[:, 0], P[:, 1]))
    return out


def map_f_inverse_arrays(params: RegionParams, P: np.ndarray) -> np.ndarray:
    out = P.copy()
    out[:, 3] /= b_over_a(params, np.hypot(P[:, 0], P[:, 1]))
    return out


# -- sampled certification -------------------------------------------------------------


@dataclass
class SamplerConfig:
    sample_count: int = 10_000
    seed: int = 42
    u_range: tuple[float, float] = (1e-3, 1e3)
    coord_bound: float = 1e3
    min_separation: float = 1e-6
    slice_z0: bool = False
    #: grid for the global bounds A, B on b/a
    r_max: float = 1e6
    grid_points: int = 10_000
    #: relative widening applied to A and B before setting C
    widen: float = 0.01
    horosphere_points: int = 1000

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be at least 1")


@dataclass
class DistortionReport:
    map: str
    sample_count: int
    seed: int
    min_ratio: float
    max_ratio: float
    max_additive_defect: float
    constant_C: float
    passed: bool
    checks: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.min_ratio <= self.max_ratio:
            raise ValueError("need 0 < min_ratio <= max_ratio")
        if self.max_additive_defect < 0:
            raise ValueError("max_additive_defect must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> DistortionReport:
        return cls(**data)


def sample_points(rng: np.random.Generator, n: int, config: SamplerConfig) -> np.ndarray:
    L = config.coord_bound
    pts = np.empty((n, 4))
    pts[:, :3] = rng.uniform(-L, L, size=(n, 3))
    if config.slice_z0:
        pts[:, 2] = 0.0
    lo, hi = np.log(config.u_range[0]), np.log(config.u_range[1])
    pts[:, 3] = np.exp(rng.uniform(lo, hi, size=n))
    return pts


def sample_pairs(config: SamplerConfig) -> tuple[np.ndarray, np.ndarray]:
    """Seeded pairs at hyperbolic distance >= min_separation."""
    rng = np.random.default_rng(config.seed)
    Ps, Qs, have = [], [], 0
    while have < config.sample_count:
        batch = config.sample_count - have
        P, Q = sample_points(rng, batch, config), sample_points(rng, batch, config)
        keep = dist_arrays(P, Q) >= config.min_separation
        Ps.append(P[keep])
        Qs.append(Q[keep])
        have += int(keep.sum())
    return np.concatenate(Ps), np.concatenate(Qs)


def axis_ratio_error(config: SamplerConfig) -> float:
    """max |rho(hP, hQ) / rho(P, Q) - 2| over seeded pairs on the u-axis."""
    rng = np.random.default_rng(config.seed + 1)
    lo, hi = np.log(config.u_range[0]), np.log(config.u_range[1])
    u = np.exp(rng.uniform(lo, hi, size=(config.sample_count, 2)))
    keep = np.abs(np.log(u[:, 0] / u[:, 1])) >= config.min_separation
    P = np.zeros((keep.sum(), 4))
    Q = np.zeros((keep.sum(), 4))
    P[:, 3], Q[:, 3] = u[keep, 0], u[keep, 1]
    ratio = dist_arrays(map_h_arrays(P), map_h_arrays(Q)) / dist_arrays(P, Q)
    return float(np.max(np.abs(ratio - 2.0)))


def certify_bilipschitz(config: SamplerConfig) -> DistortionReport:
    """Sampled distortion of h; ratios must lie in [1/4, 4] ([1/2, 2] on the slice z = 0)."""
    P, Q = sample_pairs(config)
    d = dist_arrays(P, Q)
    dh = dist_arrays(map_h_arrays(P), map_h_arrays(Q))
    ratio = dh / d
    bound = 2.0 if config.slice_z0 else 4.0
    axis = axis_ratio_error(config)
    lo, hi = float(ratio.min()), float(ratio.max())
    passed = 1.0 / bound <= lo and hi <= bound and axis <= 1e-12
    return DistortionReport("h", config.sample_count, config.seed, lo, hi,
                            float(np.max(np.abs(dh - d))), 0.0, bool(passed),
                            {"ratio_bounds": [1.0 / bound, bound], "axis_max_error": axis,
                             "slice_z0": config.slice_z0})


def qi_bounds(params: RegionParams, radii, config: SamplerConfig) -> tuple[float, float, float]:
    """(A, B, C): widened extremes of b/a over ``radii`` plus a grid on [0, r_max]."""
    grid = np.concatenate([[0.0], np.geomspace(1e-3, config.r_max, config.grid_points - 1)])
    ratio = b_over_a(params, np.concatenate([np.ravel(radii), grid]))
    A = float(ratio.min()) / (1.0 + config.widen)
    B = float(ratio.max()) * (1.0 + config.widen)
    return A, B, max(abs(math.log(A)), abs(math.log(B)))


def _surjectivity_error(params: RegionParams, config: SamplerConfig) -> float:
    rng = np.random.default_rng(config.seed + 2)
    targets = sample_points(rng, min(config.sample_count, 1000), config)
    back = map_f_arrays(params, map_f_inverse_arrays(params, targets))
    return float(np.max(np.abs(back - targets) / np.maximum(np.abs(targets), 1.0)))


def certify_quasi_isometry(params: RegionParams, config: SamplerConfig) -> DistortionReport:
    """Sampled additive distortion of f: |rho(fP, fQ) - rho(P, Q)| <= 2C, rho(P, fP) <= C."""
    P, Q = sample_pairs(config)
    radii = np.concatenate([np.hypot(P[:, 0], P[:, 1]), np.hypot(Q[:, 0], Q[:, 1])])
    A, B, C = qi_bounds(params, radii, config)
    fP, fQ = map_f_arrays(params, P), map_f_arrays(params, Q)
    d = dist_arrays(P, Q)
    df = dist_arrays(fP, fQ)
    defect = float(np.max(np.abs(df - d)))
    pointwise = float(max(dist_arrays(P, fP).max(), dist_arrays(Q, fQ).max()))
    surj = _surjectivity_error(params, config)
    ratio = df / d
    passed = defect <= 2 * C and pointwise <= C and surj <= 1e-12
    return DistortionReport("f", config.sample_count, config.seed, float(ratio.min()),
                            float(ratio.max()), defect, C, bool(passed),
                            {"A": A, "B": B, "max_displacement": pointwise,
                             "surjectivity_max_error": surj})


def horosphere_image_error(params: RegionParams, config: SamplerConfig,
                           decomposition=None) -> float:
    """max |u - b(r)| over f(h(height-1 horosphere)) at seeded points with image radius <= r_max.

    b is taken from ``decomposition`` when given, else from the brute-force envelope.
    """
    rng = np.random.default_rng(config.seed + 3)
    n = config.horosphere_points
    # r' = r sqrt(r^2 + 1) <= r_max  <=>  r <= s(r_max)
    r = np.geomspace(1e-3, float(profile_s(config.r_max)) * (1 - 1e-12), n - 1)
    r = np.concatenate([[0.0], r])
    psi = rng.uniform(0, 2 * np.pi, size=n)
    pts = np.column_stack([r * np.cos(psi), r * np.sin(psi),
                           rng.uniform(-config.coord_bound, config.coord_bound, size=n),
                           np.ones(n)])
    image = map_f_arrays(params, map_h_arrays(pts))
    r_img = np.hypot(image[:, 0], image[:, 1])
    if decomposition is None:
        b, _ = envelope_values(params, r_img)
    else:
        b = np.array([decomposition.value(params, float(t)) for t in r_img])
    return float(np.max(np.abs(image[:, 3] - b)))


def certify_composite(params: RegionParams, config: SamplerConfig,
                      decomposition=None) -> DistortionReport:
    """f o h: (1/4) rho - 2C <= rho' <= 4 rho + 2C on samples; horosphere lands on u = b(r)."""
    P, Q = sample_pairs(config)
    hP, hQ = map_h_arrays(P), map_h_arrays(Q)
    radii = np.concatenate([np.hypot(hP[:, 0], hP[:, 1]), np.hypot(hQ[:, 0], hQ[:, 1])])
    A, B, C = qi_bounds(params, radii, config)
    d = dist_arrays(P, Q)
    d2 = dist_arrays(map_f_arrays(params, hP), map_f_arrays(params, hQ))
    ratio = d2 / d
    excess = float(np.max(np.maximum(np.maximum(d2 - 4 * d, d / 4 - d2), 0.0)))
    horo = horosphere_image_error(params, config, decomposition)
    passed = excess <= 2 * C and horo <= 1e-9
    return DistortionReport("fh", config.sample_count, config.seed, float(ratio.min()),
                            float(ratio.max()), excess, C, bool(passed),
                            {"A": A, "B": B, "horosphere_max_error": horo,
                             "multiplicative_bound": 4.0})

"""Spherically symmetric mass-density profiles of a rigid object.

Four kinds are supported: a homogeneous ball, a point mass, a Gaussian-smeared
ball (a smeared point when ``R == 0``), and an atomic composite made of ``N``
little homogeneous balls of radius ``sigma``. Atom positions are not tracked
for the composite; only ``N``, ``m`` and ``sigma`` enter.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, special

from .errors import DivergentSelfEnergy, NonPositiveWidth, PointMassUndefined

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
# f(R + TAIL_WIDTHS * a) / f_peak < 1e-16 for the Gaussian tail
TAIL_WIDTHS = math.sqrt(2.0 * math.log(1e16))


class ProfileKind(str, Enum):
    UNIFORM_BALL = "uniform_ball"
    POINT = "point"
    SMEARED_BALL = "smeared_ball"
    ATOMIC = "atomic"


@dataclass(frozen=True)
class MassDensityProfile:
    kind: ProfileKind
    M: float
    R: float = 0.0
    a: float | None = None
    m: float | None = None
    sigma: float | None = None
    N: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        if not self.M > 0:
            raise ValueError("total mass M must be positive")
        kind = self.kind
        if kind in (ProfileKind.UNIFORM_BALL, ProfileKind.ATOMIC) and not self.R > 0:
            raise ValueError("radius R must be positive")
        if kind is ProfileKind.SMEARED_BALL:
            if self.a is None or not self.a > 0:
                raise NonPositiveWidth("smear width a must be positive")
            if self.R < 0:
                raise ValueError("radius R must be non-negative")
        if kind is ProfileKind.ATOMIC:
            if self.sigma is None or not self.sigma > 0:
                raise ValueError("atom radius sigma must be positive")
            if self.N is None or int(self.N) != self.N or self.N < 1:
                raise ValueError("atom count N must be a positive integer")
            if self.m is None or not self.m > 0:
                raise ValueError("atom mass m must be positive")
            if not math.isclose(self.N * self.m, self.M, rel_tol=1e-12):
                raise ValueError("atomic composite requires N*m == M")
            if self.N * self.sigma**3 > self.R**3 * (1 + 1e-12):
                raise ValueError("atoms of radius sigma do not fit in the ball (N sigma^3 > R^3)")

    @property
    def is_point(self):
        return self.kind is ProfileKind.POINT

    @property
    def is_gaussian(self):
        """Smeared point: an isotropic Gaussian of spread ``a``."""
        return self.kind is ProfileKind.SMEARED_BALL and self.R == 0

    @property
    def bulk_density(self):
        """Average density 3M/(4 pi R^3) over the outer radius."""
        if self.R <= 0:
            raise ValueError(f"{self.kind.value} profile has no finite outer radius")
        return 3.0 * self.M / (4.0 * math.pi * self.R**3)

    @property
    def atom_density(self):
        """Average density 3m/(4 pi sigma^3) of one blurred atom."""
        if self.kind is not ProfileKind.ATOMIC:
            raise ValueError("atom density is defined for atomic composites only")
        return 3.0 * self.m / (4.0 * math.pi * self.sigma**3)

    @property
    def structure_length(self):
        """Shortest length on which the density varies; harmonic expansions need d << this."""
        if self.kind is ProfileKind.ATOMIC:
            return self.sigma
        if self.kind is ProfileKind.SMEARED_BALL:
            return min(self.R, self.a) if self.R > 0 else self.a
        if self.kind is ProfileKind.UNIFORM_BALL:
            return self.R
        return 0.0

    @property
    def support_radius(self):
        """Radius outside which the density vanishes (inf for Gaussian tails)."""
        if self.kind is ProfileKind.SMEARED_BALL:
            return math.inf
        return self.R

    @property
    def r_max(self):
        """Radius beyond which f drops below 1e-16 of its peak."""
        if self.kind is ProfileKind.SMEARED_BALL:
            return self.R + TAIL_WIDTHS * self.a
        return self.R

    def to_json(self):
        out = {"kind": self.kind.value, "M": self.M, "R": self.R}
        for key in ("a", "m", "sigma", "N"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out

    @classmethod
    def from_json(cls, obj):
        kind = ProfileKind(obj["kind"])
        if kind is ProfileKind.ATOMIC:
            return atomic_composite(obj["M"], obj["R"], obj["sigma"], N=obj.get("N"), m=obj.get("m"))
        return cls(
            kind,
            float(obj["M"]),
            float(obj.get("R", 0.0)),
            a=None if obj.get("a") is None else float(obj["a"]),
        )


def uniform_ball(M, R):
    return MassDensityProfile(ProfileKind.UNIFORM_BALL, float(M), float(R))


def point_mass(M):
    return MassDensityProfile(ProfileKind.POINT, float(M))


def smeared_ball(M, R, a):
    return MassDensityProfile(ProfileKind.SMEARED_BALL, float(M), float(R), a=float(a))


def atomic_composite(M, R, sigma, N=None, m=None):
    """Ball of N identical atoms of mass m = M/N, each a homogeneous ball of radius sigma."""
    if N is None and m is None:
        raise ValueError("give the atom count N or the atom mass m")
    if N is None:
        N = round(M / m)
        if not math.isclose(N * m, M, rel_tol=1e-12):
            raise ValueError("M is not an integer multiple of m")
    N = int(N)
    if m is None:
        m = M / N
    return MassDensityProfile(
        ProfileKind.ATOMIC, float(M), float(R), m=float(m), sigma=float(sigma), N=N
    )


def _gaussian(M, a, r):
    return M * (2.0 * math.pi * a * a) ** -1.5 * np.exp(-0.5 * (r / a) ** 2)


def _smeared_fraction(R, a, r):
    """Probability that a 3-D Gaussian of spread a centred at distance r lies inside radius R."""
    s = _SQRT2 * a
    inside = r <= R
    erf_part = np.where(
        inside,
        1.0 - 0.5 * (special.erfc((R - r) / s) + special.erfc((R + r) / s)),
        0.5 * (special.erfc((r - R) / s) - special.erfc((r + R) / s)),
    )
    x = R * r / (a * a)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        # sinh form near the centre, exponential difference elsewhere; both are
        # (a / (r sqrt(2 pi))) [exp(-(R-r)^2/2a^2) - exp(-(R+r)^2/2a^2)]
        small = (2.0 / _SQRT2PI) * (R / a) * np.exp(-(R * R + r * r) / (2 * a * a)) * np.where(
            x > 0, np.sinh(x) / np.where(x > 0, x, 1.0), 1.0
        )
        large = (a / (np.where(r > 0, r, 1.0) * _SQRT2PI)) * (
            np.exp(-((R - r) ** 2) / (2 * a * a)) - np.exp(-((R + r) ** 2) / (2 * a * a))
        )
    inner = erf_part - np.where(x < 1.0, small, large)
    # outside the ball both pieces share the factors exp(-u^2); pulling them out
    # with erfcx avoids cancelling two tiny numbers in the far tail
    u1, u2 = (r - R) / s, (r + R) / s
    c = a / (np.where(r > 0, r, 1.0) * _SQRT2PI)
    with np.errstate(under="ignore", over="ignore", invalid="ignore"):  # inside points are discarded
        outer = np.exp(-u1 * u1) * (0.5 * special.erfcx(u1) - c) - np.exp(-u2 * u2) * (0.5 * special.erfcx(u2) - c)
    return np.where(inside | (x < 1.0), inner, outer)


def evaluate(profile, r):
    """Mass density f(r) at distance r from the centre of mass.

    For an atomic composite the coarse-grained bulk density is returned, since
    atom positions are not represented.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be non-negative")
    kind = profile.kind
    if kind is ProfileKind.POINT:
        raise PointMassUndefined("a point mass has no finite pointwise density")
    if kind in (ProfileKind.UNIFORM_BALL, ProfileKind.ATOMIC):
        out = np.where(r <= profile.R, profile.bulk_density, 0.0)
    elif profile.R == 0:
        out = _gaussian(profile.M, profile.a, r)
    elif profile.R <= profile.a:
        out = _small_ball_smeared(profile.M, profile.R, profile.a, r)
    else:
        out = profile.bulk_density * np.clip(_smeared_fraction(profile.R, profile.a, r), 0.0, None)
    return out if out.ndim else float(out)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _small_ball_smeared(M, R, a, r):
    """Gaussian of spread a averaged over source points uniform in a ball R <= a.

    f(r) = M g_a(r) < exp(-s^2 / 2a^2) sinh(x) / x >, x = r s / a^2, averaged
    with weight 3 s^2 / R^3 on [0, R]; the integrand is smooth for R <= a.
    """
    t = 0.5 * (_GL_NODES + 1.0)
    s = R * t
    w = 1.5 * _GL_WEIGHTS * t * t * np.exp(-0.5 * (s / a) ** 2)
    x = np.multiply.outer(r, s) / (a * a)
    with np.errstate(over="ignore", under="ignore"):
        # exp(-r^2/2a^2) sinh(x)/x, combined so that neither factor overflows
        lead = np.exp(-0.5 * (np.asarray(r)[..., None] / a) ** 2)
        shc = np.where(x > 1e-8, -np.expm1(-2.0 * x) / (2.0 * np.where(x > 1e-8, x, 1.0)), 1.0 - x)
        term = np.exp(np.log(lead + 1e-320) + x) * shc
    return M * (2.0 * math.pi * a * a) ** -1.5 * (term @ w)


def smooth(base, a):
    """Convolve ``base`` with the normalised Gaussian of spread ``a``."""
    if not a > 0:
        raise NonPositiveWidth("smoothing width a must be positive")
    if base.kind is ProfileKind.POINT:
        return smeared_ball(base.M, 0.0, a)
    if base.kind is ProfileKind.UNIFORM_BALL:
        return smeared_ball(base.M, base.R, a)
    raise ValueError(f"cannot smooth a {base.kind.value} profile")


def _radial_quad(func, profile, epsabs=1e-10, epsrel=1e-8):
    """4 pi int_0^r_max func(r) r^2 dr for a smeared ball.

    The edge region R +- 8.6a is integrated separately so a sharp edge
    (a << R) is resolved; tolerances are relative to the integrand's peak.
    """
    R, a, rmax = profile.R, profile.a, profile.r_max
    peak = func(0.0) * max(R, a) ** 2
    edges = sorted({0.0, max(0.0, R - TAIL_WIDTHS * a), R, rmax})
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        val, _ = integrate.quad(lambda r: func(r) * r * r, lo, hi, limit=400,
                                epsabs=epsabs * peak * (hi - lo) / rmax, epsrel=epsrel * 1e-2)
        total += val
    return 4.0 * math.pi * total


def total_mass(profile):
    """Radial integral 4 pi int f r^2 dr (exact M for the point mass)."""
    if profile.kind is ProfileKind.POINT:
        return profile.M
    if profile.kind in (ProfileKind.UNIFORM_BALL, ProfileKind.ATOMIC):
        return profile.bulk_density * 4.0 * math.pi * profile.R**3 / 3.0
    return _radial_quad(lambda r: evaluate(profile, r), profile)


def density_square_integral(profile):
    """int f^2 d^3r.

    For the atomic composite this is N times the value for one sigma-ball of
    mass m, i.e. f_sigma * M with f_sigma = 3m/(4 pi sigma^3).
    """
    kind = profile.kind
    if kind is ProfileKind.POINT:
        raise DivergentSelfEnergy(
            "int f^2 diverges for a point mass; smooth the profile with a cutoff a > 0"
        )
    if kind is ProfileKind.UNIFORM_BALL:
        return profile.bulk_density * profile.M
    if kind is ProfileKind.ATOMIC:
        return profile.N * profile.atom_density * profile.m
    if profile.is_gaussian:
        return profile.M**2 / (8.0 * math.pi**1.5 * profile.a**3)
    return _radial_quad(lambda r: evaluate(profile, r) ** 2, profile)


def _ball_factor(x):
    """3 (sin x - x cos x)/x^3, the normalised transform of a homogeneous ball."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-2
    xs = np.where(small, 1.0, x)
    big = 3.0 * (np.sin(xs) - xs * np.cos(xs)) / xs**3
    x2 = x * x
    series = 1.0 - x2 / 10.0 + x2 * x2 / 280.0 - x2**3 / 15120.0
    return np.where(small, series, big)


def form_factor(profile, k):
    """Fourier transform 4 pi int f(r) r^2 sin(kr)/(kr) dr."""
    k = np.asarray(k, dtype=float)
    kind = profile.kind
    if kind is ProfileKind.POINT:
        return profile.M * np.ones_like(k)
    if kind is ProfileKind.UNIFORM_BALL:
        return profile.M * _ball_factor(k * profile.R)
    if kind is ProfileKind.SMEARED_BALL:
        return profile.M * _ball_factor(k * profile.R) * np.exp(-0.5 * (k * profile.a) ** 2)
    raise ValueError("the atomic composite has no radial form factor (atom positions are not tracked)")

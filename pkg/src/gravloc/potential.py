"""Pair interaction of two displaced mass densities and the scales derived from it.

Newtonian kernel::

    U(d) = -G \\iint f_A(r) f_B(r' - d) / |r - r'| dr dr'

CSL contact kernel::

    U(d) = -gamma \\int f_A(r) f_B(r - d) dr

U carries the attractive sign (negative). Closed forms are used wherever they
exist; the remaining spherical cases go through a one-dimensional Fourier
integral, U(d) = -(2G/pi) int_0^inf F_A(k) F_B(k) j0(kd) dk.
"""

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from . import density as dens
from .density import ProfileKind
from .errors import (
    DivergentSelfEnergy,
    FitIllConditioned,
    MismatchedBulk,
    NoDecoherence,
    OutOfModelDomain,
)
from .units import UnitSystem

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
_TAIL_TOL = 1e-13
_MAX_POINTS_PER_BATCH = 2_000_000


class HarmonicRegimeWarning(UserWarning):
    """Separation is not small compared with the structure length of the body."""


class KernelKind(str, Enum):
    NEWTONIAN = "newtonian"
    CSL = "csl"


@dataclass(frozen=True)
class PairPotentialKernel:
    """Newtonian (strength ``G``) or CSL contact (strength ``gamma``) pair functional.

    ``G = 0`` is accepted as the switched-off Newtonian kernel.
    """

    kind: KernelKind
    G: float | None = None
    gamma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.kind is KernelKind.NEWTONIAN:
            if self.G is None or self.G < 0 or self.gamma is not None:
                raise ValueError("Newtonian kernel needs G >= 0 and no gamma")
        else:
            if self.gamma is None or not self.gamma > 0 or self.G is not None:
                raise ValueError("CSL kernel needs gamma > 0 and no G")

    @classmethod
    def newtonian(cls, G=1.0):
        return cls(KernelKind.NEWTONIAN, G=float(G))

    @classmethod
    def csl(cls, gamma):
        # no default: the strength of the contact kernel is not fixed by theory
        return cls(KernelKind.CSL, gamma=float(gamma))

    @property
    def strength(self):
        return self.G if self.kind is KernelKind.NEWTONIAN else self.gamma

    def to_json(self):
        if self.kind is KernelKind.NEWTONIAN:
            return {"kind": "newtonian", "G": self.G}
        return {"kind": "csl", "gamma": self.gamma}

    @classmethod
    def from_json(cls, obj):
        kind = KernelKind(obj["kind"])
        if kind is KernelKind.NEWTONIAN:
            return cls.newtonian(obj.get("G", 1.0))
        if "gamma" not in obj:
            raise ValueError("CSL kernel JSON must supply gamma")
        return cls.csl(obj["gamma"])


@dataclass(frozen=True)
class HarmonicExpansion:
    U0: float
    omega_G_sq: float
    M: float

    @property
    def omega_G(self):
        return math.sqrt(self.omega_G_sq)

    def __call__(self, d):
        """U0 + M omega_G^2 d^2 / 2."""
        return self.U0 + 0.5 * self.M * self.omega_G_sq * np.asarray(d) ** 2


@dataclass(frozen=True)
class QuadraticFit:
    omega_G_sq: float
    U0: float
    rms_residual: float


# ---------------------------------------------------------------------------
# closed forms


def _ball_pair_poly(x):
    """-U(d) R / (G M_A M_B) for two equal homogeneous balls, x = d/R <= 2."""
    return 1.2 - 0.5 * x**2 + (3.0 / 16.0) * x**3 - x**5 / 160.0


def _ball_pair_poly_diff(x):
    """[U(d) - U(0)] R / (G M_A M_B) for two equal homogeneous balls, any x = d/R."""
    x = np.asarray(x, dtype=float)
    xi = np.minimum(x, 2.0)
    inside = 0.5 * xi**2 - (3.0 / 16.0) * xi**3 + xi**5 / 160.0
    with np.errstate(divide="ignore"):
        outside = 1.2 - 1.0 / np.where(x > 0, x, 1.0)
    return np.where(x <= 2.0, inside, outside)


def _ball_potential(M, R, r, G):
    """Gravitational potential (per unit test mass) of a homogeneous ball."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        outside = -G * M / np.where(r > 0, r, 1.0)
    inside = -G * M * (3.0 * R * R - r * r) / (2.0 * R**3)
    return np.where(r < R, inside, outside)


def _gaussian_potential(M, c, r, G):
    """Potential of an isotropic Gaussian of spread c: -G M erf(r / sqrt(2) c) / r."""
    r = np.asarray(r, dtype=float)
    small = r < 1e-6 * c
    rs = np.where(small, 1.0, r)
    big = -G * M * special.erf(rs / (math.sqrt(2.0) * c)) / rs
    centre = -G * M * math.sqrt(2.0 / math.pi) / c * (1.0 - (r / c) ** 2 / 6.0)
    return np.where(small, centre, big)


def _lens_volume(RA, RB, d):
    """Volume of the intersection of two balls whose centres are d apart."""
    d = np.asarray(d, dtype=float)
    full = 4.0 * math.pi / 3.0 * min(RA, RB) ** 3
    s = RA + RB
    with np.errstate(divide="ignore", invalid="ignore"):
        lens = math.pi * (s - d) ** 2 * (d * d + 2.0 * d * s - 3.0 * (RA - RB) ** 2) / (12.0 * d)
    out = np.where(d >= s, 0.0, lens)
    return np.where(d <= abs(RA - RB), full, out)


def _atom_spacing(f):
    """Mean interatomic spacing (4 pi R^3 / 3N)^(1/3)."""
    return f.R * (4.0 * math.pi / (3.0 * f.N)) ** (1.0 / 3.0)


def _check_atomic_domain(f, d):
    limit = _atom_spacing(f) - 2.0 * f.sigma
    if np.any(np.asarray(d) > limit):
        raise OutOfModelDomain(
            f"atomic composite model holds for displacements below {limit:.6g} "
            "(interatomic spacing minus one atom diameter)"
        )


# ---------------------------------------------------------------------------
# Fourier route


def _envelope_cutoff(fA, fB, rel_tol):
    """Wavenumber beyond which F_A F_B contributes less than rel_tol of the integral."""
    cut = math.inf
    a2 = sum((f.a or 0.0) ** 2 for f in (fA, fB) if f.kind is ProfileKind.SMEARED_BALL)
    if a2 > 0:
        cut = math.sqrt(2.0 * math.log(1.0 / rel_tol) / a2) * 1.5
    RA = fA.R if fA.kind is not ProfileKind.POINT else 0.0
    RB = fB.R if fB.kind is not ProfileKind.POINT else 0.0
    if RA > 0 and RB > 0:
        # |F_A F_B| <= 9 M_A M_B / (k RA)^2 (k RB)^2 ; integral scale M_A M_B / max(R)
        cut = min(cut, (3.0 * max(RA, RB) / (RA * RA * RB * RB * rel_tol)) ** (1.0 / 3.0))
    if not math.isfinite(cut):
        raise ValueError("Fourier route needs a decaying form factor")
    return cut


def _fourier_integral(integrand, k_max, period_length):
    """int_0^k_max integrand(k) dk by 32-point Gauss-Legendre on chunks of width pi/period_length."""
    width = math.pi / max(period_length, 1e-300)
    n_chunks = max(1, int(math.ceil(k_max / width)))
    width = k_max / n_chunks
    half = 0.5 * width
    per_batch = max(1, _MAX_POINTS_PER_BATCH // _GL_NODES.size)
    total = 0.0
    for start in range(0, n_chunks, per_batch):
        idx = np.arange(start, min(n_chunks, start + per_batch))
        centres = (idx + 0.5) * width
        k = (centres[:, None] + half * _GL_NODES[None, :]).ravel()
        vals = integrand(k).reshape(idx.size, _GL_NODES.size)
        total += half * float(np.sum(vals @ _GL_WEIGHTS))
    return total


def _fourier_pair(kernel, fA, fB, d, difference=False):
    """Pair interaction (or U(d) - U(0)) by the radial Fourier integral, one scalar d."""
    k_max = _envelope_cutoff(fA, fB, _TAIL_TOL)
    RA = fA.R + 3.0 * (fA.a or 0.0)
    RB = fB.R + 3.0 * (fB.a or 0.0)
    period = RA + RB + d

    def weight(k):
        j = np.sinc(k * d / math.pi)
        return j - 1.0 if difference else j

    if kernel.kind is KernelKind.NEWTONIAN:
        pref = -2.0 * kernel.G / math.pi
        integrand = lambda k: dens.form_factor(fA, k) * dens.form_factor(fB, k) * weight(k)
    else:
        pref = -kernel.gamma / (2.0 * math.pi**2)
        integrand = lambda k: dens.form_factor(fA, k) * dens.form_factor(fB, k) * weight(k) * k * k
    return pref * _fourier_integral(integrand, k_max, period)


# ---------------------------------------------------------------------------
# pair interaction


def _same_shape(fA, fB):
    return fA.kind is fB.kind and fA.R == fB.R and fA.a == fB.a and fA.sigma == fB.sigma and fA.N == fB.N


def _newton_pair(kernel, fA, fB, d):
    G = kernel.G
    kA, kB = fA.kind, fB.kind
    if ProfileKind.ATOMIC in (kA, kB):
        if fA != fB:
            raise ValueError("the atomic composite pairs only with an identical composite")
        _check_atomic_domain(fA, d)
        # distinct-atom pairs: continuum binding, flat in d below the spacing;
        # same-atom pairs: N overlapping sigma-balls of mass m
        bulk = -1.2 * G * fA.M**2 / fA.R
        own = -(G * fA.m**2 / fA.sigma) * _ball_pair_poly(np.minimum(d / fA.sigma, 2.0))
        own = np.where(d <= 2 * fA.sigma, own, -G * fA.m**2 / np.where(d > 0, d, 1.0))
        return (1.0 - 1.0 / fA.N) * bulk + fA.N * own
    if fA.is_point and fB.is_point:
        if np.any(d == 0):
            raise DivergentSelfEnergy("Newtonian interaction of coincident point masses diverges")
        return -G * fA.M * fB.M / d
    if fA.is_point or fB.is_point:
        p, q = (fA, fB) if fA.is_point else (fB, fA)
        if q.kind is ProfileKind.UNIFORM_BALL:
            return p.M * _ball_potential(q.M, q.R, d, G)
        if q.is_gaussian:
            return p.M * _gaussian_potential(q.M, q.a, d, G)
        return _map_fourier(kernel, fA, fB, d)
    RA, RB = fA.support_radius, fB.support_radius
    if kA is kB is ProfileKind.UNIFORM_BALL and RA == RB:
        return -G * fA.M * fB.M / RA * np.where(
            d <= 2 * RA, _ball_pair_poly(np.minimum(d / RA, 2.0)), RA / np.where(d > 0, d, 1.0)
        )
    if fA.is_gaussian and fB.is_gaussian:
        c = math.hypot(fA.a, fB.a)
        return fA.M * _gaussian_potential(fB.M, c, d, G)
    out = np.empty_like(d)
    apart = d >= RA + RB
    out[apart] = -G * fA.M * fB.M / d[apart]
    if np.any(~apart):
        out[~apart] = _map_fourier(kernel, fA, fB, d[~apart])
    return out


def _csl_pair(kernel, fA, fB, d):
    gamma = kernel.gamma
    if ProfileKind.ATOMIC in (fA.kind, fB.kind):
        if fA != fB:
            raise ValueError("the atomic composite pairs only with an identical composite")
        _check_atomic_domain(fA, d)
        rho = fA.atom_density
        return -gamma * fA.N * rho * rho * _lens_volume(fA.sigma, fA.sigma, d)
    if fA.is_point and fB.is_point:
        if np.any(d == 0):
            raise DivergentSelfEnergy("contact interaction of coincident point masses diverges")
        return np.zeros_like(d)
    if fA.is_point or fB.is_point:
        p, q = (fA, fB) if fA.is_point else (fB, fA)
        return -gamma * p.M * dens.evaluate(q, d)
    if fA.kind is fB.kind is ProfileKind.UNIFORM_BALL:
        return -gamma * fA.bulk_density * fB.bulk_density * _lens_volume(fA.R, fB.R, d)
    if fA.is_gaussian and fB.is_gaussian:
        c2 = fA.a**2 + fB.a**2
        return -gamma * fA.M * fB.M * (2 * math.pi * c2) ** -1.5 * np.exp(-0.5 * d * d / c2)
    return _map_fourier(kernel, fA, fB, d)


def _map_fourier(kernel, fA, fB, d, difference=False):
    return np.array([_fourier_pair(kernel, fA, fB, float(x), difference) for x in np.ravel(d)]).reshape(
        np.shape(d)
    )


def pair_interaction(kernel, fA, fB, d):
    """Interaction energy U(d) of profiles fA, fB with centres a distance d apart.

    ``d`` may be a scalar or an array of non-negative distances. Symmetric in
    (fA, fB). Raises DivergentSelfEnergy for coincident point masses.

    The atomic composite is modelled for displacements below the interatomic
    spacing: its d-dependence comes from each atom overlapping its own displaced
    copy, while distinct-atom pairs contribute a constant continuum binding.
    """
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr < 0):
        raise ValueError("d must be non-negative")
    flat = np.atleast_1d(d_arr).astype(float)
    if kernel.kind is KernelKind.NEWTONIAN:
        out = _newton_pair(kernel, fA, fB, flat)
    else:
        out = _csl_pair(kernel, fA, fB, flat)
    out = np.asarray(out, dtype=float).reshape(d_arr.shape)
    return out if out.ndim else float(out)


def pair_difference(kernel, f, d):
    """U(d) - U(0) for a body and its displaced copy, computed without cancellation."""
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr < 0):
        raise ValueError("d must be non-negative")
    flat = np.atleast_1d(d_arr)
    if f.is_point:
        raise DivergentSelfEnergy("self-interaction of a point mass diverges; smooth the profile first")
    newton = kernel.kind is KernelKind.NEWTONIAN
    if f.kind is ProfileKind.SMEARED_BALL and not f.is_gaussian:
        out = _map_fourier(kernel, f, f, flat, difference=True)
    elif f.kind is ProfileKind.UNIFORM_BALL and newton:
        out = kernel.G * f.M**2 / f.R * _ball_pair_poly_diff(flat / f.R)
    elif f.kind is ProfileKind.ATOMIC and newton:
        _check_atomic_domain(f, flat)
        out = f.N * kernel.G * f.m**2 / f.sigma * _ball_pair_poly_diff(flat / f.sigma)
    elif f.is_gaussian and newton:
        c = math.sqrt(2.0) * f.a
        phi = _gaussian_potential(f.M, c, flat, kernel.G) - _gaussian_potential(f.M, c, 0.0, kernel.G)
        x2 = flat**2 / (2.0 * c * c)
        # erf(x)/x series keeps relative accuracy as d -> 0
        series = kernel.G * f.M * math.sqrt(2.0 / math.pi) / c * (x2 / 3.0 - x2 * x2 / 10.0)
        out = f.M * np.where(x2 < 1e-6, series, phi)
    elif f.is_gaussian:
        c2 = 2.0 * f.a**2
        out = -kernel.gamma * f.M**2 * (2 * math.pi * c2) ** -1.5 * np.expm1(-0.5 * flat**2 / c2)
    else:
        out = pair_interaction(kernel, f, f, flat) - pair_interaction(kernel, f, f, 0.0)
    out = np.asarray(out, dtype=float).reshape(d_arr.shape)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# harmonic expansion and derived scales


def harmonic_expansion(kernel, f):
    """U0 and omega_G^2 = (4 pi / 3M) G int f^2 for the Newtonian kernel."""
    if kernel.kind is not KernelKind.NEWTONIAN:
        raise ValueError("the harmonic frequency is defined for the Newtonian kernel")
    sq = dens.density_square_integral(f)
    U0 = pair_interaction(kernel, f, f, 0.0)
    return HarmonicExpansion(U0, 4.0 * math.pi / (3.0 * f.M) * kernel.G * sq, f.M)


def quadratic_fit_check(kernel, f, d_max, n_points=8):
    """Least-squares fit of sampled U(d) on [0, d_max] to U0 + M omega^2 d^2 / 2.

    A |d|^3 term is carried as a nuisance regressor: a sharp-edged body has a
    cubic correction that would otherwise bias the fitted curvature by about
    0.4 d_max / R.
    """
    if f.is_point:
        raise DivergentSelfEnergy("self-interaction of a point mass diverges; smooth the profile first")
    if n_points < 4:
        raise ValueError("need at least 4 sample points")
    length = f.structure_length
    if not 0 < d_max <= length / 20.0 * (1 + 1e-12):
        raise ValueError(f"d_max must lie in (0, {length / 20.0:.6g}] (structure length / 20)")
    d = np.linspace(0.0, d_max, n_points)
    U = pair_interaction(kernel, f, f, d)
    span = float(np.ptp(U))
    if span <= 1e3 * np.finfo(float).eps * max(abs(U[0]), np.finfo(float).tiny):
        raise FitIllConditioned("samples are indistinguishable at working precision; increase d_max")
    s = d / d_max
    A = np.column_stack([np.ones_like(s), s**2, s**3])
    coef, *_ = np.linalg.lstsq(A, U, rcond=None)
    resid = U - A @ coef
    omega_sq = 2.0 * coef[1] / (f.M * d_max**2)
    return QuadraticFit(float(omega_sq), float(coef[0]), float(np.sqrt(np.mean(resid**2))))


def localisation_width(M, omega_G_sq, units=None):
    """Ground-state width sqrt(hbar / (M omega_G))."""
    hbar = (units or UnitSystem()).hbar
    if not (M > 0 and omega_G_sq > 0):
        raise ValueError("M and omega_G_sq must be positive")
    return math.sqrt(hbar / (M * math.sqrt(omega_G_sq)))


def decoherence_time_general(kernel, fX, fY, X, Y, units=None):
    """2 hbar / (2U(X,Y) - U(X,X) - U(Y,Y)) from the full pair interaction.

    ``X`` and ``Y`` are centre-of-mass positions (scalars or vectors).
    """
    hbar = (units or UnitSystem()).hbar
    d = float(np.linalg.norm(np.atleast_1d(np.asarray(X, float) - np.asarray(Y, float))))
    if fX == fY:
        denom = 2.0 * pair_difference(kernel, fX, d)
        scale = abs(pair_interaction(kernel, fX, fX, 0.0))
    else:
        uxx = pair_interaction(kernel, fX, fX, 0.0)
        uyy = pair_interaction(kernel, fY, fY, 0.0)
        denom = 2.0 * pair_interaction(kernel, fX, fY, d) - uxx - uyy
        scale = abs(uxx) + abs(uyy)
    if not denom > 1e-13 * scale:
        raise NoDecoherence("decoherence rate vanishes: the decoherence time is infinite")
    return 2.0 * hbar / denom


def decoherence_time_harmonic(M, omega_G_sq, separation, units=None, length_scale=None):
    """2 hbar / (M omega_G^2 separation^2).

    Pass the body's ``length_scale`` to be warned when separation > length/10,
    where the quadratic expansion no longer holds. A zero separation is
    replaced by the smallest one giving a finite time.
    """
    hbar = (units or UnitSystem()).hbar
    if separation < 0:
        raise ValueError("separation must be non-negative")
    c = M * omega_G_sq
    smallest = math.sqrt(2.0 * hbar / c) / math.sqrt(np.finfo(float).max) * (1.0 + 1e-9)
    if separation < smallest:
        warnings.warn("separation below the smallest finite-time value; clipped", HarmonicRegimeWarning)
        separation = smallest
    if length_scale is not None and separation > length_scale / 10.0:
        warnings.warn(
            f"separation {separation:.3g} exceeds length/10; harmonic decoherence time is unreliable",
            HarmonicRegimeWarning,
        )
    return 2.0 * hbar / (c * separation**2)


def heating_rate(f, units=None, G=None):
    """Energy gain rate (G hbar / 2M) int f^2, as quoted with the heating formula.

    This equals (3/8 pi) hbar omega_G^2. The reduced master equation itself
    produces (hbar / 2M) 4 pi G int f^2 = (3/2) hbar omega_G^2, a factor 4 pi
    larger; see :func:`generator_heating_rate`.
    """
    units = units or UnitSystem()
    G = units.G if G is None else G
    return G * units.hbar / (2.0 * f.M) * dens.density_square_integral(f)


def generator_heating_rate(f, units=None, G=None):
    """Translational energy gain produced by the decoherence term of the master equation.

    dE/dt = (hbar / 2M) Laplacian U(0) = (hbar / 2M) 4 pi G int f^2 = (3/2) hbar omega_G^2
    in three dimensions, hbar omega_G^2 / 2 per Cartesian axis.
    """
    units = units or UnitSystem()
    G = units.G if G is None else G
    return units.hbar / (2.0 * f.M) * 4.0 * math.pi * G * dens.density_square_integral(f)


def effective_newton_constant(atomic, bulk, G=1.0):
    """G_eff = (f_sigma / f_bar) G = G (m/M) (R/sigma)^3."""
    if atomic.kind is not ProfileKind.ATOMIC or bulk.kind is not ProfileKind.UNIFORM_BALL:
        raise MismatchedBulk("expected an atomic composite and a uniform ball")
    if not (math.isclose(atomic.M, bulk.M, rel_tol=1e-12) and math.isclose(atomic.R, bulk.R, rel_tol=1e-12)):
        raise MismatchedBulk("atomic composite and bulk ball must share total mass and radius")
    return atomic.atom_density / bulk.bulk_density * G


def scale_report(f, kernel, units=None, separations=(), bulk=None):
    """All closed-form scales for one profile, as a JSON-ready dict."""
    units = units or UnitSystem()
    report = {"profile": f.to_json(), "kernel": kernel.to_json(), "units": units.to_dict()}
    report["U0"] = pair_interaction(kernel, f, f, 0.0)
    if kernel.kind is KernelKind.NEWTONIAN:
        exp = harmonic_expansion(kernel, f)
        report["omega_G_sq"] = exp.omega_G_sq
        if exp.omega_G_sq > 0:
            report["width"] = localisation_width(f.M, exp.omega_G_sq, units)
        report["heating_rate"] = heating_rate(f, units, G=kernel.G)
        report["generator_heating_rate"] = generator_heating_rate(f, units, G=kernel.G)
    rows = []
    for d in separations:
        row = {"d": float(d)}
        if "omega_G_sq" in report and report["omega_G_sq"] > 0:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", HarmonicRegimeWarning)
                row["tau"] = decoherence_time_harmonic(f.M, report["omega_G_sq"], d, units)
        try:
            row["tau_general"] = decoherence_time_general(kernel, f, f, 0.0, d, units)
        except (NoDecoherence, OutOfModelDomain):
            row["tau_general"] = None
        rows.append(row)
    report["tau_at"] = rows
    if f.kind is ProfileKind.ATOMIC and kernel.kind is KernelKind.NEWTONIAN:
        bulk = bulk or dens.uniform_ball(f.M, f.R)
        report["Gtilde"] = effective_newton_constant(f, bulk, kernel.G)
    return report

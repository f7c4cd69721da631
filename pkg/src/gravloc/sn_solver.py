"""Solitary ground states of the Schroedinger-Newton equation for a centre of mass.

The nonlinear term is the mean field V(x) = int U(|x - x'|) |psi(x')|^2 dx'
built from the pair interaction of the body with its displaced copy. The
solver works with the s-wave reduced amplitude u(r) = sqrt(4 pi) r psi(r)
(so that sum u^2 h = 1) on a uniform grid with u(0) = u(r_max) = 0.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, interpolate, linalg, signal, special

from . import potential as pot
from .density import ProfileKind
from .errors import GridTooSmall, NoBoundState, NonConvergence
from .units import UnitSystem


@dataclass(frozen=True)
class RadialGrid:
    """Interior nodes r_i = i h, i = 1..n, with h = r_max / (n + 1)."""

    r_max: float
    n: int = 2000

    @property
    def h(self):
        return self.r_max / (self.n + 1)

    @property
    def r(self):
        return self.h * np.arange(1, self.n + 1)


@dataclass(frozen=True, eq=False)
class RadialWavefunction:
    grid: np.ndarray
    values: np.ndarray
    M: float

    @property
    def h(self):
        return float(self.grid[1] - self.grid[0])

    @property
    def norm(self):
        return float(np.sum(self.values**2) * self.h)

    @property
    def psi(self):
        return self.values / (math.sqrt(4 * math.pi) * self.grid)

    @property
    def density(self):
        """|psi|^2."""
        return self.psi**2

    @property
    def mean_r2(self):
        return float(np.sum(self.grid**2 * self.values**2) * self.h / self.norm)

    @property
    def width(self):
        """sqrt(2 <x^2>) = sqrt(2 <r^2> / 3); equals l for psi ~ exp(-r^2 / 2 l^2)."""
        return math.sqrt(2.0 * self.mean_r2 / 3.0)

    @property
    def rms_per_axis(self):
        return math.sqrt(self.mean_r2 / 3.0)

    def is_nodeless(self, rel_floor=1e-12):
        u = self.values
        big = np.abs(u) > rel_floor * np.max(np.abs(u))
        return bool(np.all(u[big] > 0) or np.all(u[big] < 0))

    def boundary_ratio(self):
        return float(abs(self.values[-1]) / np.max(np.abs(self.values)))

    def to_csv(self, path, header=None):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for line in header or ():
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["r", "u", "|psi|^2"])
            for r, u, p2 in zip(self.grid, self.values, self.density):
                w.writerow([f"{r:.12g}", f"{u:.12g}", f"{p2:.12g}"])


@dataclass(frozen=True)
class SolverReport:
    energy: float  # eigenvalue of the self-consistent mean-field Hamiltonian
    width: float
    iterations: int
    residual: float
    functional_energy: float = float("nan")  # T + W/2
    kinetic: float = float("nan")
    interaction: float = float("nan")  # W = <V>
    energy_history: tuple = field(default=(), repr=False)

    def to_json(self):
        return json.dumps(
            {k: asdict(self)[k] for k in ("energy", "width", "iterations", "residual")}, sort_keys=True
        )


def _normalise(u, h):
    u = u / math.sqrt(np.sum(u * u) * h)
    return u if u[np.argmax(np.abs(u))] > 0 else -u


def _gaussian_u(r, ell):
    u = r * np.exp(-0.5 * (r / ell) ** 2)
    return _normalise(u, r[1] - r[0])


def sn_length(M, units, G):
    """Natural Schroedinger-Newton length hbar^2 / (G M^3)."""
    return units.hbar**2 / (G * M**3)


# ---------------------------------------------------------------------------
# mean field


class _MeanField:
    """Maps the radial probability density u^2 to the mean-field potential on the grid."""

    def __init__(self, r, kernel, f):
        self.r = r
        self.h = float(r[1] - r[0])
        self.G = kernel.G
        self.M = f.M
        self.point = f.is_point
        if self.G == 0 or self.point:
            return
        self.U0 = pot.pair_interaction(kernel, f, f, 0.0)
        # Q(t) = int_0^t [U(tau) - U0] tau dtau, tabulated to 2 r_max
        t_max = 2.0 * r[-1] * (1 + 1e-9)
        t = np.linspace(0.0, t_max, 4097)
        dU = pot.pair_difference(kernel, f, t)
        spline = interpolate.CubicSpline(t, dU * t)
        Q = spline.antiderivative()
        rr, ss = np.meshgrid(r, r, indexing="ij")
        self.K = (Q(rr + ss) - Q(np.abs(rr - ss))) / (2.0 * rr * ss)

    def __call__(self, weights):
        """weights = u^2 h (probability per radial cell)."""
        if self.G == 0:
            return np.zeros_like(self.r)
        if self.point:
            # -G M^2 sum_j w_j / max(r_i, r_j)
            inner = np.cumsum(weights) / self.r
            outer = np.cumsum((weights / self.r)[::-1])[::-1] - weights / self.r
            return -self.G * self.M**2 * (inner + outer)
        return self.U0 * np.sum(weights) + self.K @ weights


def mean_field_potential(psi, kernel, f):
    """V(r) = int U(|x - x'|) |psi(x')|^2 dx' on the wave function's grid.

    Finite for point masses as well, since |psi|^2 is spread out.
    """
    if kernel.kind is not pot.KernelKind.NEWTONIAN:
        raise ValueError("the Schroedinger-Newton mean field uses the Newtonian kernel")
    field_ = _MeanField(psi.grid, kernel, f)
    return field_(psi.values**2 * psi.h)


# ---------------------------------------------------------------------------
# ground state


def _kinetic(u, h, c):
    du = np.diff(np.concatenate(([0.0], u, [0.0]))) / h
    return c * float(np.sum(du * du) * h)


def default_grid(f, kernel, units, n=2000):
    units = units or UnitSystem()
    L = sn_length(f.M, units, kernel.G)
    r_max = 60.0 * L
    if not f.is_point:
        exp = pot.harmonic_expansion(kernel, f)
        # deep harmonic regime: L = l^4 / R^3 << l, so 12 l dominates
        r_max = max(r_max, 12.0 * pot.localisation_width(f.M, exp.omega_G_sq, units))
    return RadialGrid(r_max, n)


def ground_state(f, kernel, units=None, grid=None, tol=1e-10, max_iter=2000, mixing=0.5):
    """Self-consistent nodeless ground state of the Schroedinger-Newton equation.

    Each outer iteration diagonalises the linear radial problem in the frozen
    mean field, then mixes the new density into the old one (fraction
    ``mixing``). A mixing step that would raise the energy functional
    T + W/2 is retried with half the fraction, so accepted steps never raise it.
    Stops when successive eigenvalues differ by less than ``tol`` (relative).
    """
    units = units or UnitSystem()
    if kernel.kind is not pot.KernelKind.NEWTONIAN:
        raise ValueError("ground_state needs the Newtonian kernel")
    if kernel.G == 0:
        raise NoBoundState("no attraction (G = 0): free particle, no solitary state")
    grid = grid or default_grid(f, kernel, units)
    r, h = grid.r, grid.h
    c = units.hbar**2 / (2.0 * f.M)
    if f.is_point:
        ell0 = sn_length(f.M, units, kernel.G)
    else:
        ell0 = pot.localisation_width(f.M, pot.harmonic_expansion(kernel, f).omega_G_sq, units)
    u = _gaussian_u(r, min(ell0, r[-1] / 8))
    field_ = _MeanField(r, kernel, f)
    off = -c / h**2 * np.ones(r.size - 1)

    def solve(weights):
        V = field_(weights)
        w, vec = linalg.eigh_tridiagonal(2.0 * c / h**2 + V, off, select="i", select_range=(0, 0))
        phi = _normalise(vec[:, 0], h)
        T = _kinetic(phi, h, c)
        # interaction energy in phi's own field, not the mixed one
        W = float(np.sum(field_(phi * phi * h) * phi * phi) * h)
        return float(w[0]), phi, T, W

    # energies are judged relative to the binding above the constant offset U0
    offset = 0.0 if f.is_point else field_.U0
    dens_mix = u * u * h
    eps, phi, T, W = solve(dens_mix)
    E = T + 0.5 * W
    history = [E]
    for it in range(1, max_iter + 1):
        alpha = mixing
        while True:
            trial = (1.0 - alpha) * dens_mix + alpha * phi * phi * h
            eps_t, phi_t, T_t, W_t = solve(trial)
            E_t = T_t + 0.5 * W_t
            if E_t <= E + 1e-14 * abs(E) + 1e-12 * abs(E - 0.5 * offset) or alpha < 1e-6:
                break
            alpha *= 0.5
        change = abs(eps_t - eps)
        dens_mix, eps, phi, T, W, E = trial, eps_t, phi_t, T_t, W_t, E_t
        converged = change < tol * abs(eps - offset)
        history.append(E)
        if converged:
            break
    else:
        raise NonConvergence(
            f"no convergence after {max_iter} iterations", residual=change, iterations=max_iter
        )
    psi = RadialWavefunction(r, phi, f.M)
    if psi.boundary_ratio() >= 1e-10:
        raise GridTooSmall(
            f"wave function has not decayed at r_max = {grid.r_max:.6g} "
            f"(|u(r_max)|/max|u| = {psi.boundary_ratio():.2e})"
        )
    residual = float(np.sum(np.abs(phi * phi * h - dens_mix)))
    report = SolverReport(eps, psi.width, it, residual, E, T, W, tuple(history))
    return psi, report


def harmonic_ground_state(M, omega_G_sq, units=None, grid=None):
    """Gaussian ground state of width l = sqrt(hbar / (M omega_G)).

    In the co-moving frame the harmonic Schroedinger-Newton equation is an
    isotropic oscillator of frequency omega_G; this state sits (3/2) hbar omega_G
    above the bottom of that well.
    """
    units = units or UnitSystem()
    ell = pot.localisation_width(M, omega_G_sq, units)
    grid = grid or RadialGrid(12.0 * ell)
    return RadialWavefunction(grid.r, _gaussian_u(grid.r, ell), M)


# ---------------------------------------------------------------------------
# shooting oracle for the point-mass soliton


def _shoot(s0, r_end):
    """Integrate psi'' + 2psi'/r = 2 S psi, S'' + 2S'/r = 4 pi psi^2 with psi(0)=1, S(0)=s0."""
    r0 = 1e-6

    def rhs(rr, y):
        p, dp, S, dS = y
        return [dp, 2.0 * S * p - 2.0 * dp / rr, dS, 4.0 * math.pi * p * p - 2.0 * dS / rr]

    y0 = [1.0 + s0 * r0**2 / 3.0, 2.0 * s0 * r0 / 3.0, s0 + 4.0 * math.pi * r0**2 / 6.0, 4.0 * math.pi * r0 / 3.0]
    crosses = lambda rr, y: y[0]
    crosses.terminal = True
    turns = lambda rr, y: y[1]
    turns.terminal = True
    turns.direction = 1
    return integrate.solve_ivp(
        rhs, [r0, r_end], y0, method="DOP853", rtol=1e-12, atol=1e-14,
        events=[crosses, turns], dense_output=True,
    )


def shooting_point_energy(M=1.0, units=None, G=1.0):
    """Eigenvalue of the point-mass soliton by bisection shooting on the radial ODE pair.

    Works in units hbar = G = M = 1 and rescales by G^2 M^5 / hbar^2. The
    unnormalised solution has norm N = r^2 S'(r) and eigenvalue
    -(S + r S') far out; the SN scaling maps it to unit norm as eps / N^2.
    """
    units = units or UnitSystem()
    lo, hi = -10.0, -0.1  # lo: psi crosses zero, hi: psi turns up
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        sol = _shoot(mid, 200.0)
        if sol.t_events[0].size:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * abs(hi):
            break
    sol = _shoot(hi, 200.0)
    r_end = sol.t[-1]
    # stop where psi is small but still accurate
    grid = np.linspace(1.0, r_end, 4000)
    p = sol.sol(grid)[0]
    r_eval = grid[np.argmax(np.abs(p) < 1e-7)] if np.any(np.abs(p) < 1e-7) else r_end
    _, _, S, dS = sol.sol(r_eval)
    N = r_eval**2 * dS
    eps = -(S + r_eval * dS) / N**2
    return float(eps) * G**2 * M**5 / units.hbar**2


# ---------------------------------------------------------------------------
# superposition of two displaced solitons


@dataclass(frozen=True, eq=False)
class PersistenceReport:
    times: np.ndarray
    branch_norms: np.ndarray  # shape (n_times, 2)
    offdiag_norm: np.ndarray  # Hilbert-Schmidt norm of the cross term |psi_L><psi_R|
    branch_widths: np.ndarray  # rms spread of each branch along the separation axis
    fidelity: np.ndarray  # |<psi(0)|psi(t)>|
    total_norm: np.ndarray
    soliton_width: float
    omega_G: float

    @property
    def max_norm_drift(self):
        return float(np.max(np.abs(self.branch_norms - self.branch_norms[0])))

    @property
    def offdiag_decay(self):
        """Relative loss of the cross-term norm between the first and last sample."""
        return float(1.0 - self.offdiag_norm[-1] / self.offdiag_norm[0])


class _AxialModel:
    """One-dimensional reduction along the separation axis.

    The transverse profile is frozen to the harmonic Gaussian of width l, so
    the pair interaction enters averaged over the transverse offset:
    U_ax(z) = int_0^inf U(sqrt(z^2 + 2 l^2 q)) exp(-q) dq.
    """

    def __init__(self, z, kernel, f, ell, hbar, M):
        self.z = z
        self.dz = float(z[1] - z[0])
        self.hbar, self.M = hbar, M
        n = z.size
        lags = self.dz * np.arange(-(n - 1), n)
        if kernel.G == 0:
            self.U = np.zeros_like(lags)
        elif f.is_point:
            x = np.abs(lags) / (math.sqrt(2.0) * ell)
            self.U = -kernel.G * M**2 * math.sqrt(math.pi) / (math.sqrt(2.0) * ell) * special.erfcx(x)
        else:
            q, w = special.roots_laguerre(64)
            dist = np.sqrt(lags[:, None] ** 2 + 2.0 * ell**2 * q[None, :])
            dU = pot.pair_difference(kernel, f, dist)
            # the constant U0 only shifts the phase; it is dropped to keep exponents small
            self.U = dU @ w
        k = 2.0 * math.pi * np.fft.fftfreq(n, self.dz)
        self.k2 = k * k

    def potential(self, prob):
        return signal.fftconvolve(prob * self.dz, self.U, mode="valid")

    def kinetic_phase(self, dt):
        return np.exp(-1j * self.hbar * self.k2 * dt / (2.0 * self.M))

    def energy(self, psi):
        prob = np.abs(psi) ** 2
        V = self.potential(prob)
        pk = np.fft.fft(psi)
        T = self.hbar**2 / (2 * self.M) * float(np.sum(self.k2 * np.abs(pk) ** 2) / np.sum(np.abs(pk) ** 2))
        return T + 0.5 * float(np.sum(V * prob) * self.dz)

    def soliton(self, guess, dt, tol=1e-12, max_steps=20000):
        """Imaginary-time split-step relaxation to the axial ground state."""
        psi = guess / math.sqrt(np.sum(np.abs(guess) ** 2) * self.dz)
        kin = np.exp(-self.hbar * self.k2 * dt / (2.0 * self.M))
        E_old = self.energy(psi)
        for _ in range(max_steps):
            V = self.potential(np.abs(psi) ** 2)
            psi = psi * np.exp(-0.5 * V * dt / self.hbar)
            psi = np.fft.ifft(kin * np.fft.fft(psi))
            V = self.potential(np.abs(psi) ** 2)
            psi = psi * np.exp(-0.5 * V * dt / self.hbar)
            psi = psi / math.sqrt(np.sum(np.abs(psi) ** 2) * self.dz)
            E = self.energy(psi)
            if abs(E - E_old) < tol * abs(E):
                break
            E_old = E
        return np.abs(psi)


def superposition_persistence_check(f, kernel, separation, units=None, periods=3.0, width=None,
                                    t_final=None, dt=None, n_samples=60, n_axial=None):
    """Real-time evolution of the symmetric superposition of two displaced solitons.

    Both branches evolve in the common mean field of the total density, so the
    evolution is unitary and the cross term keeps its norm: pure
    Schroedinger-Newton dynamics does not decohere the superposition.

    For ``G = 0`` there is no soliton; each branch is then a Gaussian of the
    given ``width`` (amplitude ~ exp(-z^2 / 2 width^2)) that spreads freely, and
    ``t_final`` must be given.
    """
    units = units or UnitSystem()
    hbar, M = units.hbar, f.M
    free = kernel.G == 0
    if free:
        if width is None or t_final is None:
            raise ValueError("G = 0 needs an initial width and t_final")
        ell, omega = float(width), 0.0
        dt = dt or t_final / 2000
    else:
        _, rep = ground_state(f, kernel, units)
        ell = rep.width
        if f.is_point:
            omega = abs(rep.energy) / hbar
        else:
            omega = pot.harmonic_expansion(kernel, f).omega_G
        if t_final is None:
            t_final = periods * 2.0 * math.pi / omega
        dt = dt or 0.01 / omega
    spread = ell if not free else ell * math.sqrt(1.0 + (hbar * t_final / (M * ell * ell)) ** 2)
    span = separation + 28.0 * max(ell, spread)
    dz = ell / 10.0
    n = n_axial or int(2 ** math.ceil(math.log2(span / dz)))
    z = (np.arange(n) - n // 2) * (span / n)
    model = _AxialModel(z, kernel, f, ell, hbar, M)
    if free:
        shape = lambda c: np.exp(-0.5 * ((z - c) / ell) ** 2)
    else:
        base = model.soliton(np.exp(-0.5 * (z / ell) ** 2), dt=0.002 / omega)
        shape = lambda c: np.interp(z - c, z, base, left=0.0, right=0.0)
    left, right = shape(-separation / 2).astype(complex), shape(separation / 2).astype(complex)
    norm = math.sqrt(np.sum(np.abs(left + right) ** 2) * model.dz)
    left, right = left / norm, right / norm
    psi0 = left + right

    steps = max(1, int(round(t_final / dt)))
    dt = t_final / steps
    sample_at = set(np.linspace(0, steps, min(n_samples, steps + 1)).round().astype(int))
    phase_k = model.kinetic_phase(dt)
    rec = {k: [] for k in ("t", "norms", "off", "widths", "fid", "total")}

    def record(step):
        nl = float(np.sum(np.abs(left) ** 2) * model.dz)
        nr = float(np.sum(np.abs(right) ** 2) * model.dz)
        widths = []
        for b, nb in ((left, nl), (right, nr)):
            p = np.abs(b) ** 2 * model.dz / nb
            mu = float(np.sum(z * p))
            widths.append(math.sqrt(float(np.sum((z - mu) ** 2 * p))))
        psi = left + right
        rec["t"].append(step * dt)
        rec["norms"].append((nl, nr))
        rec["off"].append(math.sqrt(nl * nr))
        rec["widths"].append(widths)
        rec["fid"].append(abs(complex(np.vdot(psi0, psi) * model.dz)))
        rec["total"].append(float(np.sum(np.abs(psi) ** 2) * model.dz))

    record(0)
    V = model.potential(np.abs(left + right) ** 2)
    for step in range(1, steps + 1):
        half = np.exp(-0.5j * V * dt / hbar)
        left, right = left * half, right * half
        left = np.fft.ifft(phase_k * np.fft.fft(left))
        right = np.fft.ifft(phase_k * np.fft.fft(right))
        V = model.potential(np.abs(left + right) ** 2)
        half = np.exp(-0.5j * V * dt / hbar)
        left, right = left * half, right * half
        if step in sample_at:
            record(step)
    return PersistenceReport(
        np.array(rec["t"]), np.array(rec["norms"]), np.array(rec["off"]), np.array(rec["widths"]),
        np.array(rec["fid"]), np.array(rec["total"]), ell, omega,
    )

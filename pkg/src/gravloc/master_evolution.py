"""Centre-of-mass density matrix under the gravitational decoherence master equation.

    d rho(x, y)/dt = (i hbar / 2M)(d_x^2 - d_y^2) rho - D(x, y) rho,
    D(x, y) = (2U(x, y) - U(x, x) - U(y, y)) / 2 hbar

is evolved on a one-dimensional grid (x and y along one Cartesian axis) with
periodic boundaries. Strang splitting: half a damping step, an exact spectral
kinetic step rho -> K rho K^dagger, another half damping step.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import potential as pot
from .errors import FitIllConditioned, InsufficientDecay, StabilityViolation
from .units import UnitSystem


def make_axis(span, n):
    """n equally spaced positions covering a periodic box of length span, centred on 0."""
    return (np.arange(n) - n // 2) * (span / n)


def auto_axis(separation, width, min_points=128):
    """Axis spanning at least 8 separations (and 24 widths) with spacing <= width / 4."""
    span = max(8.0 * separation, 24.0 * width)
    n = max(min_points, int(2 ** math.ceil(math.log2(span / (width / 4.0)))))
    return make_axis(span, n)


@dataclass(eq=False)
class DensityMatrixGrid:
    axis: np.ndarray
    values: np.ndarray
    M: float
    branch_centres: tuple | None = None

    @property
    def dx(self):
        return float(self.axis[1] - self.axis[0])

    def trace(self):
        return float(np.real(np.trace(self.values)) * self.dx)

    def hermiticity_error(self):
        return float(np.max(np.abs(self.values - self.values.conj().T)))

    def purity(self):
        return float(np.sum(np.abs(self.values) ** 2) * self.dx**2)

    def lowest_eigenvalues(self, k=5):
        """The k most negative eigenvalues of the discretised operator (positivity spot check)."""
        herm = 0.5 * (self.values + self.values.conj().T) * self.dx
        return np.linalg.eigvalsh(herm)[:k]

    def copy(self):
        return DensityMatrixGrid(self.axis.copy(), self.values.copy(), self.M, self.branch_centres)

    @classmethod
    def from_wavefunction(cls, axis, psi, M, branch_centres=None):
        dx = float(axis[1] - axis[0])
        psi = np.asarray(psi, dtype=complex)
        psi = psi / math.sqrt(np.sum(np.abs(psi) ** 2) * dx)
        return cls(axis, np.outer(psi, psi.conj()), M, branch_centres)

    @classmethod
    def gaussian(cls, axis, width, M, centre=0.0, momentum=0.0, hbar=1.0):
        """Pure Gaussian, amplitude ~ exp(-(x - centre)^2 / 2 width^2 + i p x / hbar)."""
        psi = np.exp(-0.5 * ((axis - centre) / width) ** 2 + 1j * momentum * axis / hbar)
        return cls.from_wavefunction(axis, psi, M)

    @classmethod
    def cat(cls, axis, separation, width, M, centre=0.0):
        """Equal-weight superposition of two Gaussians at centre -+ separation / 2."""
        left, right = centre - 0.5 * separation, centre + 0.5 * separation
        psi = np.exp(-0.5 * ((axis - left) / width) ** 2) + np.exp(-0.5 * ((axis - right) / width) ** 2)
        return cls.from_wavefunction(axis, psi, M, (left, right))

    @classmethod
    def from_json(cls, spec, axis=None):
        """{"type": "cat", "separation", "width", "M"} or {"type": "gaussian", "width", "M"}.

        Optional keys: "centre", "momentum" (gaussian), "span" and "n" for the grid.
        """
        kind = spec["type"]
        width, M = float(spec["width"]), float(spec["M"])
        d = float(spec.get("separation", 0.0))
        if axis is None:
            if "span" in spec and "n" in spec:
                axis = make_axis(float(spec["span"]), int(spec["n"]))
            else:
                axis = auto_axis(d, width)
        if kind == "cat":
            return cls.cat(axis, d, width, M, float(spec.get("centre", 0.0)))
        if kind == "gaussian":
            return cls.gaussian(axis, width, M, float(spec.get("centre", 0.0)), float(spec.get("momentum", 0.0)))
        raise ValueError(f"unknown initial state type {kind!r}")

    def to_csv(self, path):
        """Matrix dump: header line with the axis, then |rho| real and imaginary parts row by row."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("# axis," + ",".join(f"{x:.12g}" for x in self.axis) + "\n")
            fh.write(f"# M={self.M:.12g}; rows: x index; columns: re(rho(x, y_j)) then im(rho(x, y_j))\n")
            w = csv.writer(fh)
            for row in self.values:
                w.writerow([f"{v:.12g}" for v in np.concatenate([row.real, row.imag])])

    def save_npz(self, path):
        np.savez(path, axis=self.axis, rho=self.values, M=self.M)


@dataclass(eq=False)
class DecoherenceObservables:
    times: np.ndarray
    offdiag_abs: np.ndarray  # 3x3 stencil (geometric) average of |rho| at the probe
    coherence: np.ndarray  # offdiag_abs / sqrt(diagonal stencil averages at both probe points)
    energy: np.ndarray  # kinetic energy <p^2> / 2M along the axis
    trace: np.ndarray
    purity: np.ndarray
    hermiticity: np.ndarray
    min_eigenvalue: np.ndarray  # nan where the positivity spot check was skipped
    fitted_rate: float = float("nan")
    fit_r_squared: float = float("nan")
    probe: tuple = ()
    step_halving_change: float | None = None
    extra: dict = field(default_factory=dict)

    def to_csv(self, path, header=None):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for line in header or ():
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["t", "offdiag_abs", "energy", "coherence", "trace", "purity"])
            for row in zip(self.times, self.offdiag_abs, self.energy, self.coherence, self.trace, self.purity):
                w.writerow([f"{v:.12g}" for v in row])


@dataclass(frozen=True)
class DecoherenceFit:
    tau: float
    rate: float
    r_squared: float
    e_folds: float


def decoherence_generator(kernel, f, x, y, units=None, harmonic=False):
    """Local decay rate D(x, y) = (U(|x - y|) - U(0)) / hbar >= 0.

    With ``harmonic=True`` the quadratic form M omega_G^2 |x - y|^2 / 2 hbar
    is used. Raises DivergentSelfEnergy for an unsmoothed point mass.
    """
    units = units or UnitSystem()
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    if harmonic:
        exp = pot.harmonic_expansion(kernel, f)
        out = f.M * exp.omega_G_sq * d**2 / (2.0 * units.hbar)
    else:
        out = pot.pair_difference(kernel, f, d) / units.hbar
    return out if np.ndim(out) else float(out)


def generator_matrix(axis, kernel, f, units=None, harmonic=True):
    """D(x_i, x_j) on the grid, built from the distinct lags |i - j| dx."""
    n = axis.size
    dx = float(axis[1] - axis[0])
    lags = dx * np.arange(n)
    rate = decoherence_generator(kernel, f, 0.0, lags, units, harmonic)
    idx = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    return np.asarray(rate)[idx]


def _stencil(values, i, j):
    """Geometric mean of |rho| over the 3x3 block around (i, j).

    Averaging in log space makes the block decay at the mean of its nine
    local rates; an arithmetic mean would be dominated by the slowest lag.
    """
    n = values.shape[0]
    rows = np.clip(np.arange(i - 1, i + 2), 0, n - 1)
    cols = np.clip(np.arange(j - 1, j + 2), 0, n - 1)
    block = np.abs(values[np.ix_(rows, cols)])
    if np.any(block == 0):
        return 0.0
    return float(np.exp(np.mean(np.log(block))))


class _Propagator:
    def __init__(self, axis, M, hbar, D, dt, kinetic):
        n = axis.size
        dx = float(axis[1] - axis[0])
        k = 2.0 * math.pi * np.fft.fftfreq(n, dx)
        self.k2 = k * k
        self.hbar, self.M = hbar, M
        self.half_damp = np.exp(-0.5 * D * dt)
        self.phase = np.exp(-1j * hbar * self.k2 * dt / (2.0 * M))
        self.kinetic = kinetic

    def _apply_K(self, X, axis):
        shape = (-1, 1) if axis == 0 else (1, -1)
        return np.fft.ifft(self.phase.reshape(shape) * np.fft.fft(X, axis=axis), axis=axis)

    def step(self, rho):
        rho = rho * self.half_damp
        if self.kinetic:
            A = self._apply_K(rho, 0)  # K rho
            rho = np.conj(self._apply_K(np.conj(A), 1))  # (K rho) K^dagger
        return rho * self.half_damp

    def energy(self, rho):
        mom = np.real(np.diag(np.fft.fft(np.fft.ifft(rho, axis=1), axis=0)))
        return float(np.sum(self.hbar**2 * self.k2 / (2.0 * self.M) * mom) / np.sum(mom))


def _fit_log(times, values):
    ok = values > 0
    t, y = times[ok], np.log(values[ok])
    if t.size < 2 or np.ptp(t) == 0:
        return float("nan"), float("nan")
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return -float(slope), r2


def evolve(rho0, kernel, f, t_final, dt, use_harmonic=True, kinetic=True, units=None, probe=None,
           n_samples=51, positivity_checks=5, generator=None, verify_step=False):
    """Advance rho0 to t_final and record decoherence observables.

    ``probe`` is a pair of positions (x_a, x_b) for the off-diagonal element;
    for a cat state it defaults to (right centre, left centre). ``generator``
    overrides D(x_i, x_j) with a precomputed matrix. The fitted rate is the
    log-linear slope of the normalised coherence, which cancels the change of
    the diagonal from packet spreading.
    """
    units = units or UnitSystem()
    hbar = units.hbar
    axis = rho0.axis
    D = generator if generator is not None else generator_matrix(axis, kernel, f, units, use_harmonic)
    if probe is None:
        probe = tuple(reversed(rho0.branch_centres)) if rho0.branch_centres else (0.0, 0.0)
    ia, ib = (int(np.argmin(np.abs(axis - p))) for p in probe)

    bound = math.inf
    if D[ia, ib] > 0:
        bound = 0.01 / D[ia, ib]
    if kinetic and generator is None and kernel.kind is pot.KernelKind.NEWTONIAN and not f.is_point:
        om2 = pot.harmonic_expansion(kernel, f).omega_G_sq
        if om2 > 0:
            bound = min(bound, 0.01 / math.sqrt(om2))
    if dt > bound * (1 + 1e-9):
        raise ValueError(f"dt = {dt:.3g} exceeds the stability bound {bound:.3g}")

    steps = max(1, int(round(t_final / dt)))
    dt = t_final / steps
    prop = _Propagator(axis, rho0.M, hbar, D, dt, kinetic)
    sample_steps = np.unique(np.linspace(0, steps, min(n_samples, steps + 1)).round().astype(int))
    check_steps = set(sample_steps[np.unique(np.linspace(0, sample_steps.size - 1, positivity_checks).round().astype(int))]) if positivity_checks else set()
    rec = {k: [] for k in ("t", "off", "coh", "E", "tr", "pur", "herm", "eig")}
    state = rho0.copy()
    rho = state.values
    dx = state.dx

    def record(step):
        state.values = rho
        tr, herm = state.trace(), state.hermiticity_error()
        if abs(tr - 1.0) > 1e-8 or herm > 1e-10:
            raise StabilityViolation(f"invariant broken at t = {step * dt:.6g}: trace {tr!r}, hermiticity {herm:.3g}")
        off = _stencil(rho, ia, ib)
        diag = math.sqrt(_stencil(rho, ia, ia) * _stencil(rho, ib, ib))
        rec["t"].append(step * dt)
        rec["off"].append(off)
        rec["coh"].append(off / diag if diag > 0 else 0.0)
        rec["E"].append(prop.energy(rho))
        rec["tr"].append(tr)
        rec["pur"].append(state.purity())
        rec["herm"].append(herm)
        rec["eig"].append(float(state.lowest_eigenvalues(5)[0]) if step in check_steps else float("nan"))

    sample_set = set(sample_steps.tolist())
    record(0)
    for step in range(1, steps + 1):
        rho = prop.step(rho)
        if step in sample_set:
            record(step)
    state.values = rho
    times = np.array(rec["t"])
    coherence = np.array(rec["coh"])
    rate, r2 = _fit_log(times, coherence)
    obs = DecoherenceObservables(
        times, np.array(rec["off"]), coherence, np.array(rec["E"]), np.array(rec["tr"]),
        np.array(rec["pur"]), np.array(rec["herm"]), np.array(rec["eig"]), rate, r2,
        (float(axis[ia]), float(axis[ib])),
    )
    if verify_step:
        _, half = evolve(rho0, kernel, f, t_final, dt / 2, use_harmonic, kinetic, units, probe,
                         n_samples, 0, D)
        change = abs(half.fitted_rate - rate) / abs(half.fitted_rate) if half.fitted_rate else abs(rate)
        obs.step_halving_change = change
        if change >= 5e-3:
            raise StabilityViolation(f"step halving changed the fitted rate by {change:.3%}")
    return state, obs


def energy_gain_measure(observables):
    """Slope of the kinetic energy time series (per-axis share of the heating rate)."""
    t, E = observables.times, observables.energy
    if t.size < 3 or np.ptp(t) == 0:
        raise FitIllConditioned("need at least three samples over a non-zero time span")
    slope, _ = np.polyfit(t, E, 1)
    return float(slope)


def decoherence_time_fit(observables, min_samples=20, min_e_folds=2.0):
    """1 / fitted rate of the normalised off-diagonal coherence."""
    c = observables.coherence
    if c.size < min_samples:
        raise InsufficientDecay(f"need >= {min_samples} samples, got {c.size}")
    if c[0] <= 0:
        raise InsufficientDecay("no initial coherence at the probe")
    e_folds = math.log(c[0] / c[-1]) if c[-1] > 0 else math.inf
    if not e_folds >= min_e_folds * (1 - 1e-9):
        raise InsufficientDecay(f"only {e_folds:.3g} e-folds of decay observed (need {min_e_folds})")
    rate, r2 = _fit_log(observables.times, c)
    return DecoherenceFit(1.0 / rate, rate, r2, e_folds)


def write_observables_json(observables, path):
    data = {
        "fitted_rate": observables.fitted_rate,
        "fit_r_squared": observables.fit_r_squared,
        "probe": list(observables.probe),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True)

"""Unit systems: SI, and internal systems in which hbar (and usually G) are 1."""

from dataclasses import dataclass

from scipy import constants

HBAR_SI = constants.hbar  # 1.054571817e-34 J s
G_SI = constants.G  # 6.67430e-11 m^3 kg^-1 s^-2


@dataclass(frozen=True)
class UnitSystem:
    """Constants expressed in internal units, plus the SI size of each internal unit.

    A quantity with dimensions ``mass**m length**l time**t`` converts as
    ``internal = si / (mass_scale**m * length_scale**l * time_scale**t)``.
    """

    hbar: float = 1.0
    G: float = 1.0
    mass_scale: float = 1.0
    length_scale: float = 1.0
    time_scale: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass_scale", "length_scale", "time_scale"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.G < 0:
            raise ValueError("G must be non-negative")

    @classmethod
    def natural(cls, mass_scale=None):
        """hbar = G = 1.

        With no ``mass_scale`` the system is abstract (all scales 1). Given a mass
        scale M0, the length and time scales follow from hbar = G = 1:
        L0 = hbar^2/(G M0^3), T0 = hbar^3/(G^2 M0^5).
        """
        if mass_scale is None:
            return cls()
        m0 = float(mass_scale)
        length = HBAR_SI**2 / (G_SI * m0**3)
        time = HBAR_SI**3 / (G_SI**2 * m0**5)
        return cls(1.0, 1.0, m0, length, time)

    @classmethod
    def si(cls):
        return cls(HBAR_SI, G_SI, 1.0, 1.0, 1.0)

    @classmethod
    def from_scales(cls, mass_scale, length_scale):
        """hbar = 1 with caller-chosen mass and length scales; G takes its derived value."""
        m0, l0 = float(mass_scale), float(length_scale)
        t0 = m0 * l0**2 / HBAR_SI
        g = G_SI * m0 * t0**2 / l0**3
        return cls(1.0, g, m0, l0, t0)

    def _factor(self, mass, length, time):
        return self.mass_scale**mass * self.length_scale**length * self.time_scale**time

    def to_internal(self, value, mass=0, length=0, time=0):
        return value / self._factor(mass, length, time)

    def to_si(self, value, mass=0, length=0, time=0):
        return value * self._factor(mass, length, time)

    def to_dict(self):
        return {
            "hbar": self.hbar,
            "G": self.G,
            "mass_scale": self.mass_scale,
            "length_scale": self.length_scale,
            "time_scale": self.time_scale,
        }


# dimension exponents (mass, length, time) of the quantities the toolkit reports
DIMENSIONS = {
    "mass": (1, 0, 0),
    "length": (0, 1, 0),
    "time": (0, 0, 1),
    "energy": (1, 2, -2),
    "power": (1, 2, -3),
    "frequency_sq": (0, 0, -2),
    "density": (1, -3, 0),
    "density_sq_integral": (2, -3, 0),
    "G": (-1, 3, -2),
    "hbar": (1, 2, -1),
    "csl_gamma": (-1, 5, -2),
    "wavefunction_radial": (0, -0.5, 0),
    "probability_density": (0, -3, 0),
}


def convert(units, value, quantity, to="internal"):
    """Convert ``value`` of a named quantity (a key of ``DIMENSIONS``)."""
    m, l, t = DIMENSIONS[quantity]
    if to == "internal":
        return units.to_internal(value, m, l, t)
    if to == "si":
        return units.to_si(value, m, l, t)
    raise ValueError(f"unknown direction {to!r}")

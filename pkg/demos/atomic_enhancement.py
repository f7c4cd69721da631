"""Resolving the mass density at the atomic scale.

A ball built from N atoms of radius sigma has int f^2 = N (3 m^2 / 4 pi sigma^3),
far larger than the bulk value. Every scale driven by int f^2 inherits the
enhancement factor (m/M)(R/sigma)^3, which acts like a larger Newton
constant.
"""

import numpy as np

from gravloc import density as dn
from gravloc import potential as pot

newton = pot.PairPotentialKernel.newtonian(1.0)
bulk = dn.uniform_ball(1.0, 1.0)

# Atoms must stay separated: sigma well below the spacing R (4 pi / 3N)^(1/3)
print(" sigma      G_eff/G     omega^2 ratio   heat ratio")
for sigma in np.geomspace(1e-3, 3e-2, 4):
    atoms = dn.atomic_composite(1.0, 1.0, sigma, N=1000)
    g_eff = pot.effective_newton_constant(atoms, bulk)
    om_ratio = pot.harmonic_expansion(newton, atoms).omega_G_sq / pot.harmonic_expansion(newton, bulk).omega_G_sq
    heat_ratio = pot.heating_rate(atoms) / pot.heating_rate(bulk)
    print(f"{sigma:.1e}  {g_eff:12.5e}  {om_ratio:12.5e}  {heat_ratio:12.5e}")

atoms = dn.atomic_composite(1.0, 1.0, 1e-2, m=1e-3)
print(f"\nm/M = 1e-3, R/sigma = 100: G_eff/G = {pot.effective_newton_constant(atoms, bulk):.6g}")

# Only displacements below the interatomic spacing are represented
fit = pot.quadratic_fit_check(newton, atoms, atoms.sigma / 20)
print(f"fitted omega^2 {fit.omega_G_sq:.6g}, integral {pot.harmonic_expansion(newton, atoms).omega_G_sq:.6g}")

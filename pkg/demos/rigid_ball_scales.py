"""Localisation and decoherence scales of a rigid homogeneous ball.

The pair interaction of a ball with its displaced copy is flat near
coincidence, so for small displacements it acts like a harmonic well of
frequency omega_G. That frequency fixes the ground-state width and the decay
time of a spatial superposition.
"""

import numpy as np

from gravloc import density as dn
from gravloc import potential as pot
from gravloc.units import UnitSystem

# Dimensionless first: hbar = G = M = R = 1
ball = dn.uniform_ball(1.0, 1.0)
newton = pot.PairPotentialKernel.newtonian(1.0)

exp = pot.harmonic_expansion(newton, ball)
print(f"U0 = {exp.U0:.6f}   omega_G^2 = {exp.omega_G_sq:.6f}")

# The same frequency read off a fit of the sampled interaction
fit = pot.quadratic_fit_check(newton, ball, d_max=0.02)
print(f"fitted omega_G^2 = {fit.omega_G_sq:.8f}  (rms residual {fit.rms_residual:.1e})")

print(f"width = {pot.localisation_width(1.0, exp.omega_G_sq):.6f}")
for d in (0.01, 0.05, 0.2, 1.0):
    harmonic = pot.decoherence_time_harmonic(1.0, exp.omega_G_sq, d)
    general = pot.decoherence_time_general(newton, ball, ball, 0.0, d)
    print(f"d = {d:5.2f}   tau_harmonic = {harmonic:10.3f}   tau_full = {general:10.3f}")

# The sharp edge gives U(d) a cubic term, so the full and harmonic times
# separate linearly in d/R (3d/8R to first order).

# A 1e-14 kg glass-like ball of radius 100 nm in SI units
si = UnitSystem.si()
grain = dn.uniform_ball(1e-14, 1e-7)
g_si = pot.PairPotentialKernel.newtonian(si.G)
om2 = pot.harmonic_expansion(g_si, grain).omega_G_sq
print()
print(f"SI grain: omega_G = {np.sqrt(om2):.3e} 1/s")
print(f"          width   = {pot.localisation_width(grain.M, om2, si):.3e} m")
print(f"          tau(1 nm) = {pot.decoherence_time_harmonic(grain.M, om2, 1e-9, si):.3e} s")

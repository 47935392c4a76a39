"""Globally optimal dipole allocation for one satellite pair, step by step.

Two coil-carrying satellites sit 2 m apart.  We command a combined
force/torque on the first and ask for the cheapest pair of sinusoidal
dipole waveforms that produces it on time average.  The convex dual gives
a certified lower bound on the required squared amplitudes; the recovered
waveforms attain it, and a multistart nonlinear search confirms nothing
cheaper exists.
"""

import numpy as np

import emff

rng = np.random.default_rng(42)

# geometry: satellite j sits at +2 m along x from satellite k
r = np.array([2.0, 0.0, 0.0])
u = emff.Wrench(force=np.array([4e-6, -1e-6, 2e-6]), torque=np.array([0.0, 3e-7, -1e-7]))
hint = np.cross(u.force, r)
omega = 2.0 * np.pi * 0.5  # 0.5 Hz drive

sol = emff.allocate(r, hint, u, omega=omega)
print("commanded wrench      :", u.as_vector())
print("dipole j  sin / cos   :", sol.dipole_j.s, sol.dipole_j.c)
print("dipole k  sin / cos   :", sol.dipole_k.s, sol.dipole_k.c)
print(f"primal cost J_p       : {sol.J_p:.6f} A^2 m^4")
print(f"dual bound J_d        : {sol.J_d:.6f} A^2 m^4")
print(f"certified gap         : {sol.gap:.2e}")

# the time-averaged model reproduces the command...
op = emff.interaction_operator(r, hint)
achieved = emff.averaged_wrench(op, sol.dipole_j, sol.dipole_k)
print(f"wrench residual       : {np.linalg.norm(achieved.as_vector() - u.as_vector()):.2e} N")

# ...and so does a direct numerical average of the instantaneous physics
period = 2.0 * np.pi / omega
numeric = emff.time_average_oracle(r, sol.dipole_j, sol.dipole_k, period, 512, hint=hint)
print(f"numeric-average check : {np.linalg.norm(numeric.as_vector() - u.as_vector()):.2e} N")

# independent global-optimality cross-check from 20 random starts
brute = emff.brute_force_allocate(r, hint, u, restarts=20, seed=0)
print(f"multistart best J     : {brute.J_p:.6f} (ratio to dual bound "
      f"{brute.J_p / sol.J_d:.8f})")

# both coils spend the same power: a structural property of the optimum
print(f"amplitude split       : {sol.dipole_j.amplitude_squared:.6f} vs "
      f"{sol.dipole_k.amplitude_squared:.6f} A^2 m^4")

# translate the dual bound into coil watts for a concrete design
coil = emff.CoilDesign(turns=200, coil_radius=0.5, wire_radius=1e-3, resistivity=1.68e-8)
print(f"coil power            : {emff.power_index(coil, sol.J_d) * 1e3:.3f} mW "
      f"(200-turn, 0.5 m copper coil)")

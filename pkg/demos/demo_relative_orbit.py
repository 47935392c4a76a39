"""Stable relative orbits under J2 and the residual disturbance they feel.

Builds the linearized relative-motion constants for a 500 km, 45 deg
reference orbit, shows that the closed-form propagation matches numerical
integration, closes a desired trajectory over one period, and samples the
position-proportional disturbance generator that formation keeping must
cancel.
"""

import numpy as np

import emff

ctx = emff.make_context(altitude=500e3, incl=np.deg2rad(45.0), theta0=0.0)
print(f"mean motion           : {ctx.omega_o:.6e} rad/s")
print(f"J2 frequency split    : omega_xy = {ctx.omega_xy:.6e}, omega_z = {ctx.omega_z:.6e}")
print(f"orbit period          : {ctx.period:.1f} s")

# closed orbit: zero drift constants, 120 m in-plane / 80 m cross-track
elems = emff.RelativeElements(c1=0.0, c4=0.0, r_xy=120.0, theta_xy=0.3,
                              r_z=80.0, theta_z=-0.9)
state0 = emff.propagate_analytic_state(elems, ctx, 0.0)
T = ctx.period
times, states = emff.integrate_dynamics(state0, ctx, None, None, T, T / 4000.0)
err = np.linalg.norm(states[-1][:3] - emff.propagate_analytic(elems, ctx, T))
print(f"RK4 vs closed form    : {err:.2e} m after one orbit")

# a drifting orbit: nonzero c1 walks along-track, linearly in time
drifting = emff.RelativeElements(c1=5.0, c4=0.0, r_xy=120.0, theta_xy=0.3,
                                 r_z=80.0, theta_z=-0.9)
y0 = emff.propagate_analytic(drifting, ctx, 0.0)[1]
y1 = emff.propagate_analytic(drifting, ctx, T)[1]
print(f"along-track drift     : {(y1 - y0):.2f} m per orbit at c1 = 5 m")

# the designed stable plane closes exactly when z is driven at omega_xy
plane = emff.StablePlane(theta_p=np.deg2rad(30.0), theta_z_xy=0.0, r_xyd=100.0)
closure = np.linalg.norm(
    emff.desired_trajectory(plane, ctx, T) - emff.desired_trajectory(plane, ctx, 0.0)
)
print(f"trajectory closure    : {closure:.2e} m")

# cost of that closure: the frequency mismatch re-enters as a disturbance
from emff.orbit import z_amplitude

ts = np.linspace(0.0, T, 8)
dfz = emff.freq_mismatch_disturbance(z_amplitude(plane), 0.0, ctx, ts)
print("freq-mismatch accel   :", np.array2string(dfz, precision=3), "m/s^2")

# position-proportional disturbance generator along the orbit
print("disturbance generator K_orb(t) at t = 0:")
print(emff.j2_disturbance_matrix(ctx, 0.0))
core = emff.j2_core_matrix(ctx, 1000.0)
print(f"core trace at t=1000 s: {np.trace(core):.2e} (zero-trace residual)")

# the payoff: feedforward cancellation of K_orb holds the formation exactly
p0 = emff.desired_trajectory(plane, ctx, 0.0)
v0 = np.array([plane.r_xyd * ctx.omega_xy / ctx.c_plus, 0.0,
               z_amplitude(plane) * ctx.omega_xy])
state0 = np.concatenate([p0, v0])
d_fn = lambda t, X: emff.j2_core_matrix(ctx, t) @ X[:3]
_, free = emff.integrate_dynamics(state0, ctx, None, d_fn, T, T / 4000)
drift = np.linalg.norm(free[-1][:3] - emff.desired_trajectory(plane, ctx, T))
u_fn = lambda t, X: -(emff.j2_disturbance_matrix(ctx, t)
                      @ emff.desired_trajectory(plane, ctx, t))
ts2, held = emff.integrate_dynamics(state0, ctx, u_fn, d_fn, T, T / 4000)
track = np.linalg.norm(held[:, :3] - emff.desired_trajectory(plane, ctx, ts2), axis=1)
print(f"uncontrolled drift    : {drift:.2f} m per orbit")
print(f"with feedforward      : {track.max():.2e} m max tracking error")

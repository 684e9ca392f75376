"""Jitted inner loops: the front-fixed time step and the reference ODE.

The profile equations are advanced on the normalized coordinate
xi = x / s(t) in [0, 1], where they read

    u_t = u_xixi / s^2 + xi (s'/s) u_xi + u (1 - u - k v)
    v_t = D v_xixi / s^2 + xi (s'/s) v_xi + r v (1 - v - h u)

Diffusion is implicit (one tridiagonal solve per species per step),
advection and reaction explicit, and the front obeys forward Euler on
the Stefan rule.  Within a step: fluxes and s' come from the current
state, s is advanced, then the profiles advance using the new s and the
just-computed s'.

``step_once`` is the only place the scheme arithmetic lives; the bulk
runner calls the same compiled function, so single-step and batched
trajectories agree bit for bit.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# step status codes
OK = 0
BLOWUP = 1
UNDERSHOOT = 2
RETREAT = 3
CFL = 4
PROFILE_CEIL = 5
SPEED_CEIL = 6
STOP_SPREADING = 10

#: undershoots in [-UNDERSHOOT_TOL, 0) are flushed to zero; below is an error
UNDERSHOOT_TOL = 1e-12
#: the front may move at most this fraction of a physical cell per step
CFL_FRACTION = 0.5


@njit(cache=True)
def _thomas(rhs, out, cp, start, end, off, diag, first_upper):
    """Solve a tridiagonal system with constant coefficients in place.

    Rows start..end-1 have sub/super-diagonal ``off`` and diagonal
    ``diag``; the first row's super-diagonal is ``first_upper`` (the
    no-flux ghost mirror doubles it).  ``cp`` is scratch.
    """
    inv = 1.0 / diag
    cp[start] = first_upper * inv
    out[start] = rhs[start] * inv
    for i in range(start + 1, end):
        denom = diag - off * cp[i - 1]
        cp[i] = off / denom
        out[i] = (rhs[i] - off * out[i - 1]) / denom
    for i in range(end - 2, start - 1, -1):
        out[i] = out[i] - cp[i] * out[i + 1]


@njit(cache=True)
def step_once(U, V, Un, Vn, rhs_u, rhs_v, cp, xi, dxi, s, dt,
              mu, rho, k, h, r, D, dirichlet, m_cap, speed_cap):
    """Advance one step; mutates U, V only if the step is accepted.

    Returns (status, s_new, s_prime, sup_u, sup_v).
    """
    n = U.shape[0] - 1

    # one-sided second-order front gradients in xi, scaled to x (U[n] = 0)
    fu = (U[n - 2] - 4.0 * U[n - 1]) / (2.0 * dxi * s)
    fv = (V[n - 2] - 4.0 * V[n - 1]) / (2.0 * dxi * s)
    sp = -mu * (fu + rho * fv)
    if sp < 0.0:
        return RETREAT, s, sp, 0.0, 0.0
    if sp > speed_cap:
        return SPEED_CEIL, s, sp, 0.0, 0.0
    if dt * sp > CFL_FRACTION * dxi * s:
        return CFL, s, sp, 0.0, 0.0
    s_new = s + dt * sp

    adv = sp / s_new
    inv2dxi = 1.0 / (2.0 * dxi)
    for i in range(1, n):
        du = (U[i + 1] - U[i - 1]) * inv2dxi
        dv = (V[i + 1] - V[i - 1]) * inv2dxi
        rhs_u[i] = U[i] + dt * (xi[i] * adv * du + U[i] * (1.0 - U[i] - k * V[i]))
        rhs_v[i] = V[i] + dt * (xi[i] * adv * dv + r * V[i] * (1.0 - V[i] - h * U[i]))

    ru = dt / (s_new * s_new * dxi * dxi)
    rv = D * dt / (s_new * s_new * dxi * dxi)
    if dirichlet:
        _thomas(rhs_u, Un, cp, 1, n, -ru, 1.0 + 2.0 * ru, -ru)
        _thomas(rhs_v, Vn, cp, 1, n, -rv, 1.0 + 2.0 * rv, -rv)
        Un[0] = 0.0
        Vn[0] = 0.0
    else:
        # ghost mirror U[-1] = U[1]: row 0 couples to U[1] with doubled weight
        rhs_u[0] = U[0] + dt * U[0] * (1.0 - U[0] - k * V[0])
        rhs_v[0] = V[0] + dt * r * V[0] * (1.0 - V[0] - h * U[0])
        _thomas(rhs_u, Un, cp, 0, n, -ru, 1.0 + 2.0 * ru, -2.0 * ru)
        _thomas(rhs_v, Vn, cp, 0, n, -rv, 1.0 + 2.0 * rv, -2.0 * rv)
    Un[n] = 0.0
    Vn[n] = 0.0

    sup_u = 0.0
    sup_v = 0.0
    for i in range(n + 1):
        a = Un[i]
        b = Vn[i]
        if not (np.isfinite(a) and np.isfinite(b)):
            return BLOWUP, s, sp, 0.0, 0.0
        if a < 0.0:
            if a < -UNDERSHOOT_TOL:
                return UNDERSHOOT, s, sp, 0.0, 0.0
            a = 0.0
            Un[i] = 0.0
        if b < 0.0:
            if b < -UNDERSHOOT_TOL:
                return UNDERSHOOT, s, sp, 0.0, 0.0
            b = 0.0
            Vn[i] = 0.0
        if a > sup_u:
            sup_u = a
        if b > sup_v:
            sup_v = b
    if sup_u > m_cap or sup_v > m_cap:
        return PROFILE_CEIL, s, sp, sup_u, sup_v

    U[:] = Un
    V[:] = Vn
    return OK, s_new, sp, sup_u, sup_v


@njit(cache=True)
def march(U, V, s, t, n_steps, dt, mu, rho, k, h, r, D, dirichlet,
          m_cap, speed_cap, xi, Un, Vn, rhs_u, rhs_v, cp,
          ser_t, ser_s, ser_sp, ser_su, ser_sv, offset, lam_stop):
    """Run up to n_steps accepted steps, recording one series row each.

    Returns (status, steps_done, s, t); on errors U, V hold the last
    accepted state.  ``lam_stop > 0`` stops early once s exceeds it.
    """
    dxi = xi[1] - xi[0]
    done = 0
    for m in range(n_steps):
        st, s_new, sp, su, sv = step_once(
            U, V, Un, Vn, rhs_u, rhs_v, cp, xi, dxi, s, dt,
            mu, rho, k, h, r, D, dirichlet, m_cap, speed_cap)
        if st != OK:
            return st, done, s, t
        s = s_new
        t = t + dt
        i = offset + m
        ser_t[i] = t
        ser_s[i] = s
        ser_sp[i] = sp
        ser_su[i] = su
        ser_sv[i] = sv
        done = m + 1
        if lam_stop > 0.0 and s > lam_stop:
            return STOP_SPREADING, done, s, t
    return OK, done, s, t


@njit(cache=True)
def ode_rk4(u, v, k, h, r, dt, n_steps, stride, out_t, out_u, out_v):
    """Classic fourth-order step for u' = u(1-u-kv), v' = rv(1-v-hu).

    Samples every ``stride`` steps plus the final state; returns
    (status, rows_written) with status 1 on non-finite values.
    """
    t = 0.0
    out_t[0] = 0.0
    out_u[0] = u
    out_v[0] = v
    count = 1
    for m in range(n_steps):
        a1 = u * (1.0 - u - k * v)
        b1 = r * v * (1.0 - v - h * u)
        u2 = u + 0.5 * dt * a1
        v2 = v + 0.5 * dt * b1
        a2 = u2 * (1.0 - u2 - k * v2)
        b2 = r * v2 * (1.0 - v2 - h * u2)
        u3 = u + 0.5 * dt * a2
        v3 = v + 0.5 * dt * b2
        a3 = u3 * (1.0 - u3 - k * v3)
        b3 = r * v3 * (1.0 - v3 - h * u3)
        u4 = u + dt * a3
        v4 = v + dt * b3
        a4 = u4 * (1.0 - u4 - k * v4)
        b4 = r * v4 * (1.0 - v4 - h * u4)
        u = u + dt * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
        v = v + dt * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0
        t = t + dt
        if not (np.isfinite(u) and np.isfinite(v)):
            return 1, count
        if (m + 1) % stride == 0 or m + 1 == n_steps:
            out_t[count] = t
            out_u[count] = u
            out_v[count] = v
            count += 1
    return 0, count

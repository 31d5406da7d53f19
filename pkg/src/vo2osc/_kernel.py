"""Compiled inner loop: semi-implicit stepping with bisection event location.

The network ODE is M dV/dt = -G(state, V) V + b with G frozen at the start
of each (sub)step, so each advance by tau solves the linear system
(M + tau G) V' = M V + tau b.  Threshold crossings inside a step are
localized by bisection on that same frozen-coefficient propagator.

This mirrors the per-device logic in `device` (r_on clamping, inclusive
thresholds); the pure-Python reference in `circuit._step_python` is the
readable contract and the two are cross-checked in the test suite.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_EVENT_OVERFLOW = 1
STATUS_SOLVE_FAILED = 2


@njit(cache=True, nogil=True, inline="always")
def _r_on_clamped(v, a, b, c, floor, ceil):
    if v <= 0.0:
        return ceil
    den = (a * v + b) * v + c
    if den <= 0.0:
        return ceil
    r = v / den
    if r < floor:
        return floor
    if r > ceil:
        return ceil
    return r


@njit(cache=True, nogil=True)
def _solve(A, rhs, x):
    """Gaussian elimination with partial pivoting; returns False if singular."""
    n = rhs.shape[0]
    for col in range(n):
        piv = col
        best = abs(A[col, col])
        for r in range(col + 1, n):
            if abs(A[r, col]) > best:
                best = abs(A[r, col])
                piv = r
        if best == 0.0:
            return False
        if piv != col:
            for cc in range(n):
                A[col, cc], A[piv, cc] = A[piv, cc], A[col, cc]
            rhs[col], rhs[piv] = rhs[piv], rhs[col]
        for r in range(col + 1, n):
            f = A[r, col] / A[col, col]
            for cc in range(col, n):
                A[r, cc] -= f * A[col, cc]
            rhs[r] -= f * rhs[col]
    for r in range(n - 1, -1, -1):
        s = rhs[r]
        for cc in range(r + 1, n):
            s -= A[r, cc] * x[cc]
        x[r] = s / A[r, r]
    return True


@njit(cache=True, nogil=True)
def _branch_g_eff(k, v, phase, r_off, qa, qb, qc, r_floor, r_ceil, r_i):
    """Effective node-to-ground conductance of the switch + r_i branch."""
    if phase[k] == 0:
        return 1.0 / (r_off[k] + r_i[k])
    r = _r_on_clamped(v[k], qa[k], qb[k], qc[k], r_floor[k], r_ceil[k])
    return 1.0 / (r + r_i[k])


@njit(cache=True, nogil=True)
def _advance(M, lap_r, g_s, b_src, g_eff, v, tau, A, rhs, out):
    """out = state after a frozen-conductance backward step of length tau."""
    n = v.shape[0]
    for r in range(n):
        for cc in range(n):
            A[r, cc] = M[r, cc] + tau * lap_r[r, cc]
        A[r, r] += tau * (g_s[r] + g_eff[r])
        s = 0.0
        for cc in range(n):
            s += M[r, cc] * v[cc]
        rhs[r] = s + tau * b_src[r]
    return _solve(A, rhs, out)


@njit(cache=True, nogil=True)
def _crossed(k, v_eff, phase, v_th, v_h):
    if phase[k] == 0:
        return v_eff >= v_th[k]
    return v_eff <= v_h[k]


@njit(cache=True, nogil=True)
def run_network(
    M,
    lap_r,
    v_dd,
    g_s,
    r_i,
    v_th,
    v_h,
    r_off,
    qa,
    qb,
    qc,
    r_floor,
    r_ceil,
    noise,
    noise_fs,
    dt,
    n_steps,
    event_tol,
    record_every,
    v0,
    phase0,
    ev_cap,
):
    n = v0.shape[0]
    v = v0.copy()
    phase = phase0.copy()
    b_src = g_s * v_dd

    n_rec = n_steps // record_every + 1
    rec_t = np.empty(n_rec)
    rec_v = np.empty((n_rec, n))
    rec_i = np.empty((n_rec, n))
    rec_s = np.empty((n_rec, n), dtype=np.uint8)
    ev_t = np.empty(ev_cap)
    ev_osc = np.empty(ev_cap, dtype=np.int32)
    ev_dir = np.empty(ev_cap, dtype=np.int8)
    nev = 0

    A = np.empty((n, n))
    rhs = np.empty(n)
    v_cand = np.empty(n)
    v_mid = np.empty(n)
    g_eff = np.empty(n)
    nz = np.empty(n)
    n_noise = noise.shape[1]

    # sample 0 at t = 0
    for k in range(n):
        g_eff[k] = _branch_g_eff(k, v, phase, r_off, qa, qb, qc, r_floor, r_ceil, r_i)
    rec_t[0] = 0.0
    for k in range(n):
        rec_v[0, k] = v[k]
        rec_i[0, k] = v[k] * g_eff[k]
        rec_s[0, k] = phase[k]
    i_rec = 1

    for step in range(n_steps):
        t0 = step * dt
        idx = int(t0 * noise_fs)
        if idx >= n_noise:
            idx = n_noise - 1
        for k in range(n):
            nz[k] = noise[k, idx]

        remaining = dt
        while remaining > 0.0:
            for k in range(n):
                g_eff[k] = _branch_g_eff(
                    k, v, phase, r_off, qa, qb, qc, r_floor, r_ceil, r_i
                )
            if not _advance(M, lap_r, g_s, b_src, g_eff, v, remaining, A, rhs, v_cand):
                return (
                    rec_t[:i_rec], rec_v[:i_rec], rec_i[:i_rec], rec_s[:i_rec],
                    ev_t[:nev], ev_osc[:nev], ev_dir[:nev],
                    v, phase, STATUS_SOLVE_FAILED,
                )
            any_cross = False
            for k in range(n):
                if _crossed(k, v_cand[k] + nz[k], phase, v_th, v_h):
                    any_cross = True
                    break
            if not any_cross:
                for k in range(n):
                    v[k] = v_cand[k]
                remaining = 0.0
                break

            # bisect the earliest crossing time in (0, remaining]
            lo = 0.0
            hi = remaining
            while hi - lo > event_tol:
                mid = 0.5 * (lo + hi)
                _advance(M, lap_r, g_s, b_src, g_eff, v, mid, A, rhs, v_mid)
                crossed_mid = False
                for k in range(n):
                    if _crossed(k, v_mid[k] + nz[k], phase, v_th, v_h):
                        crossed_mid = True
                        break
                if crossed_mid:
                    hi = mid
                else:
                    lo = mid
            _advance(M, lap_r, g_s, b_src, g_eff, v, hi, A, rhs, v_mid)
            # flip the lowest-index device that has crossed (tie-break rule)
            flip = -1
            for k in range(n):
                if _crossed(k, v_mid[k] + nz[k], phase, v_th, v_h):
                    flip = k
                    break
            for k in range(n):
                v[k] = v_mid[k]
            if flip >= 0:
                t_ev = t0 + (dt - remaining) + hi
                if nev >= ev_cap:
                    return (
                        rec_t[:i_rec], rec_v[:i_rec], rec_i[:i_rec], rec_s[:i_rec],
                        ev_t[:nev], ev_osc[:nev], ev_dir[:nev],
                        v, phase, STATUS_EVENT_OVERFLOW,
                    )
                ev_t[nev] = t_ev
                ev_osc[nev] = flip
                ev_dir[nev] = 1 if phase[flip] == 0 else -1
                nev += 1
                phase[flip] = 1 - phase[flip]
            remaining -= hi

        if (step + 1) % record_every == 0:
            for k in range(n):
                g_eff[k] = _branch_g_eff(
                    k, v, phase, r_off, qa, qb, qc, r_floor, r_ceil, r_i
                )
            rec_t[i_rec] = (step + 1) * dt
            for k in range(n):
                rec_v[i_rec, k] = v[k]
                rec_i[i_rec, k] = v[k] * g_eff[k]
                rec_s[i_rec, k] = phase[k]
            i_rec += 1

    return (
        rec_t[:i_rec], rec_v[:i_rec], rec_i[:i_rec], rec_s[:i_rec],
        ev_t[:nev], ev_osc[:nev], ev_dir[:nev],
        v, phase, STATUS_OK,
    )

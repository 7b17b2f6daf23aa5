# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled flow kernels: Dormand-Prince 5(4) stepping with constraint
projection and event location for the built-in models.

Twin of ``semitoric.models._purepy``; model/RHS dispatch mirrors
``semitoric.models.defs`` (codes in defs.CODE).
"""

import numpy as np

from libc.math cimport fabs, fmax, fmin, pow, sqrt

DEF MAXDIM = 8

cdef int OK = 0
cdef int STEP_COLLAPSE = 1
cdef int CAP_HIT = 2


cdef inline void cross(double* a, double* b, double* out) nogil:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


cdef inline double comb_coeff(int comp, double cJ, double cH) nogil:
    if comp == 0:
        return cJ
    if comp == 1:
        return cH
    return 0.0


cdef void rhs(int code, double* par, double* z, double cJ, double cH,
              double* out) nogil:
    cdef double lam, t, a, b, coup, c1, c2
    cdef double gx[3]
    cdef double gy[3]
    cdef double tmp[3]
    cdef int i, n, idx, comp, k, ke, kh, kff
    if code == 0:  # spherical pendulum on TS^2
        out[0] = cJ * (-z[1]) + cH * z[3]
        out[1] = cJ * z[0] + cH * z[4]
        out[2] = cH * z[5]
        lam = z[2] - (z[3] * z[3] + z[4] * z[4] + z[5] * z[5])
        out[3] = cJ * (-z[4]) + cH * lam * z[0]
        out[4] = cJ * z[3] + cH * lam * z[1]
        out[5] = cH * (-1.0 + lam * z[2])
    elif code == 1:  # coupled angular momenta
        t = par[0]; a = par[1]; b = par[2]
        coup = t / (a * b)
        gx[0] = cH * coup * z[3]
        gx[1] = cH * coup * z[4]
        gx[2] = cJ + cH * coup * z[5]
        gy[0] = cH * coup * z[0]
        gy[1] = cH * coup * z[1]
        gy[2] = cJ + cH * ((1.0 - t) / a + coup * z[2])
        cross(gx, z, out)
        cross(gy, z + 3, tmp)
        out[3] = tmp[0]; out[4] = tmp[1]; out[5] = tmp[2]
    elif code == 2:  # spin oscillator
        out[0] = cJ * (-z[1]) + cH * (-0.5 * z[3])
        out[1] = cJ * z[0] + cH * (0.5 * z[2])
        gx[0] = cH * 0.5 * z[0]
        gx[1] = cH * 0.5 * z[1]
        gx[2] = cJ
        cross(gx, z + 2, tmp)
        out[2] = tmp[0]; out[3] = tmp[1]; out[4] = tmp[2]
    elif code == 3:  # toric product of heights
        gx[0] = 0.0; gx[1] = 0.0; gx[2] = cJ
        cross(gx, z, out)
        gy[0] = 0.0; gy[1] = 0.0; gy[2] = cH
        cross(gy, z + 3, tmp)
        out[3] = tmp[0]; out[4] = tmp[1]; out[5] = tmp[2]
    else:  # canonical local models, coordinates (x_1..x_n, xi_1..xi_n)
        k = <int> par[0]; ke = <int> par[1]; kh = <int> par[2]; kff = <int> par[3]
        n = k + ke + kh + 2 * kff
        for i in range(2 * n):
            out[i] = 0.0
        comp = 0
        idx = 0
        for i in range(k):  # q = xi_idx
            out[idx] += comb_coeff(comp, cJ, cH)
            comp += 1; idx += 1
        for i in range(ke):  # q = (x^2 + xi^2)/2
            c1 = comb_coeff(comp, cJ, cH)
            out[idx] += c1 * z[n + idx]
            out[n + idx] -= c1 * z[idx]
            comp += 1; idx += 1
        for i in range(kh):  # q = x xi
            c1 = comb_coeff(comp, cJ, cH)
            out[idx] += c1 * z[idx]
            out[n + idx] -= c1 * z[n + idx]
            comp += 1; idx += 1
        for i in range(kff):
            c1 = comb_coeff(comp, cJ, cH)      # q1 = x_i xi_{i+1} - x_{i+1} xi_i
            c2 = comb_coeff(comp + 1, cJ, cH)  # q2 = x_i xi_i + x_{i+1} xi_{i+1}
            out[idx] += -c1 * z[idx + 1] + c2 * z[idx]
            out[idx + 1] += c1 * z[idx] + c2 * z[idx + 1]
            out[n + idx] += -c1 * z[n + idx + 1] - c2 * z[n + idx]
            out[n + idx + 1] += c1 * z[n + idx] - c2 * z[n + idx + 1]
            comp += 2; idx += 2


cdef void project(int code, double* par, double* z) nogil:
    cdef double nx, ny, dot
    cdef int i
    if code == 0:
        nx = sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2])
        for i in range(3):
            z[i] /= nx
        dot = z[0] * z[3] + z[1] * z[4] + z[2] * z[5]
        for i in range(3):
            z[3 + i] -= dot * z[i]
    elif code == 1:
        nx = sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2])
        ny = sqrt(z[3] * z[3] + z[4] * z[4] + z[5] * z[5])
        for i in range(3):
            z[i] *= par[2] / nx
            z[3 + i] *= par[1] / ny
    elif code == 2:
        nx = sqrt(z[2] * z[2] + z[3] * z[3] + z[4] * z[4])
        for i in range(3):
            z[2 + i] /= nx
    elif code == 3:
        nx = sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2])
        ny = sqrt(z[3] * z[3] + z[4] * z[4] + z[5] * z[5])
        for i in range(3):
            z[i] *= par[0] / nx
            z[3 + i] *= par[1] / ny


cdef double invariant(int code, double* z, int idx) nogil:
    if code == 0:
        if idx == 0:
            return z[2]
        if idx == 1:
            return z[5]
        return z[0] * z[3] + z[1] * z[4]
    if code == 1:
        if idx == 0:
            return z[2]
        if idx == 1:
            return z[5]
        return z[0] * z[3] + z[1] * z[4] + z[2] * z[5]
    if code == 2:
        if idx == 0:
            return z[4]
        if idx == 1:
            return 0.5 * (z[0] * z[0] + z[1] * z[1])
        return z[0] * z[3] - z[1] * z[2]
    if code == 3:
        if idx == 0:
            return z[3]
        if idx == 1:
            return z[4]
        return z[2]
    return z[0]


# Dormand-Prince 5(4) tableau
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 35.0 / 384.0 - 5179.0 / 57600.0
cdef double E3 = 500.0 / 1113.0 - 7571.0 / 16695.0
cdef double E4 = 125.0 / 192.0 - 393.0 / 640.0
cdef double E5 = -2187.0 / 6784.0 + 92097.0 / 339200.0
cdef double E6 = 11.0 / 84.0 - 187.0 / 2100.0
cdef double E7 = -1.0 / 40.0


cdef double dp_step(int code, double* par, double* z, double h, double sgn,
                    double cJ, double cH, int dim, double* z5, double rtol,
                    double atol) nogil:
    """One trial step; returns the scaled error norm and fills z5."""
    cdef double k1[MAXDIM]
    cdef double k2[MAXDIM]
    cdef double k3[MAXDIM]
    cdef double k4[MAXDIM]
    cdef double k5[MAXDIM]
    cdef double k6[MAXDIM]
    cdef double k7[MAXDIM]
    cdef double w[MAXDIM]
    cdef double err, sc, e
    cdef int i
    rhs(code, par, z, cJ, cH, k1)
    for i in range(dim):
        k1[i] *= sgn
        w[i] = z[i] + h * A21 * k1[i]
    rhs(code, par, w, cJ, cH, k2)
    for i in range(dim):
        k2[i] *= sgn
        w[i] = z[i] + h * (A31 * k1[i] + A32 * k2[i])
    rhs(code, par, w, cJ, cH, k3)
    for i in range(dim):
        k3[i] *= sgn
        w[i] = z[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
    rhs(code, par, w, cJ, cH, k4)
    for i in range(dim):
        k4[i] *= sgn
        w[i] = z[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
    rhs(code, par, w, cJ, cH, k5)
    for i in range(dim):
        k5[i] *= sgn
        w[i] = z[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                           + A64 * k4[i] + A65 * k5[i])
    rhs(code, par, w, cJ, cH, k6)
    for i in range(dim):
        k6[i] *= sgn
        z5[i] = z[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                            + B5 * k5[i] + B6 * k6[i])
    rhs(code, par, z5, cJ, cH, k7)
    err = 0.0
    for i in range(dim):
        k7[i] *= sgn
        e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                 + E6 * k6[i] + E7 * k7[i])
        sc = atol + rtol * fmax(fabs(z[i]), fabs(z5[i]))
        err += (e / sc) * (e / sc)
    return sqrt(err / dim)


cdef int model_dim(int code, double* par) nogil:
    if code == 2:
        return 5
    if code == 4:
        return 2 * (<int> par[0] + <int> par[1] + <int> par[2]
                    + 2 * (<int> par[3]))
    return 6


cdef int c_integrate(int code, double* par, double* z, double T, double cJ,
                     double cH, double rtol, double atol, long max_steps) nogil:
    cdef double t = 0.0, h, en, sgn = 1.0
    cdef double z5[MAXDIM]
    cdef int i, dim = model_dim(code, par)
    cdef long nsteps = 0
    if T == 0.0:
        return OK
    if T < 0.0:
        sgn = -1.0
        T = -T
    h = fmin(0.1, T)
    while t < T:
        if nsteps >= max_steps:
            return CAP_HIT
        h = fmin(h, T - t)
        en = dp_step(code, par, z, h, sgn, cJ, cH, dim, z5, rtol, atol)
        if en <= 1.0:
            t += h
            for i in range(dim):
                z[i] = z5[i]
            project(code, par, z)
            nsteps += 1
            if en > 0.0:
                h *= fmin(5.0, fmax(0.2, 0.9 * pow(en, -0.2)))
            else:
                h *= 5.0
        else:
            h *= fmax(0.2, 0.9 * pow(en, -0.2))
            if h < 1e-14 * fmax(1.0, t):
                return STEP_COLLAPSE
    return OK


def integrate(int code, double[:] params, double[:] z0, double cJ, double cH,
              double T, double rtol, double atol, long max_steps):
    """Flow z0 for time T (signed); returns (z, status, 0)."""
    cdef double z[MAXDIM]
    cdef double par[4]
    cdef int i, status
    for i in range(z0.shape[0]):
        z[i] = z0[i]
    for i in range(params.shape[0]):
        par[i] = params[i]
    with nogil:
        status = c_integrate(code, par, z, T, cJ, cH, rtol, atol, max_steps)
    out = np.empty(z0.shape[0])
    for i in range(z0.shape[0]):
        out[i] = z[i]
    return out, status, 0


def advance_to_event(int code, double[:] params, double[:] z0, double cJ,
                     double cH, int inv_idx, double target, double direction,
                     double t_skip, double t_max, double rtol, double atol,
                     long max_steps=2_000_000, double time_tol=1e-10):
    """Integrate forward to the first directional crossing of the section
    ``invariant(z, inv_idx) == target``; the detector arms only after
    ``t_skip`` so a seed on the section does not trigger at t=0.

    Returns (t_event, z_event, status)."""
    cdef double z[MAXDIM]
    cdef double z5[MAXDIM]
    cdef double zbase[MAXDIM]
    cdef double zhi[MAXDIM]
    cdef double zmid[MAXDIM]
    cdef double par[4]
    cdef double t = 0.0, h = 0.05, en, s_prev, s_new, s_mid
    cdef double t_lo, t_hi, t_mid
    cdef int i, dim, status = CAP_HIT, st
    cdef long nsteps = 0
    cdef bint crossed, done = False
    for i in range(z0.shape[0]):
        z[i] = z0[i]
    for i in range(params.shape[0]):
        par[i] = params[i]
    dim = model_dim(code, par)
    if t_skip > 0.0:
        with nogil:
            st = c_integrate(code, par, z, t_skip, cJ, cH, rtol, atol, max_steps)
        if st != OK:
            out0 = np.empty(z0.shape[0])
            for i in range(z0.shape[0]):
                out0[i] = z[i]
            return t_skip, out0, st
        t = t_skip
    s_prev = invariant(code, z, inv_idx) - target
    with nogil:
        while t < t_max and not done:
            if nsteps >= max_steps:
                status = CAP_HIT
                break
            h = fmin(h, t_max - t)
            en = dp_step(code, par, z, h, 1.0, cJ, cH, dim, z5, rtol, atol)
            if en > 1.0:
                h *= fmax(0.2, 0.9 * pow(en, -0.2))
                if h < 1e-14 * fmax(1.0, t):
                    status = STEP_COLLAPSE
                    done = True
                continue
            project(code, par, z5)
            s_new = invariant(code, z5, inv_idx) - target
            crossed = ((s_prev * s_new < 0.0 or (s_new == 0.0 and s_prev != 0.0))
                       and (s_new - s_prev) * direction > 0.0)
            if crossed:
                t_lo = 0.0
                t_hi = h
                for i in range(dim):
                    zbase[i] = z[i]
                    zhi[i] = z5[i]
                status = OK
                while t_hi - t_lo > time_tol * fmax(1.0, t + t_hi):
                    t_mid = 0.5 * (t_lo + t_hi)
                    for i in range(dim):
                        zmid[i] = zbase[i]
                    st = c_integrate(code, par, zmid, t_mid - t_lo, cJ, cH,
                                     rtol, atol, max_steps)
                    if st != OK:
                        status = st
                        break
                    s_mid = invariant(code, zmid, inv_idx) - target
                    if s_prev * s_mid < 0.0 or s_mid == 0.0:
                        t_hi = t_mid
                        for i in range(dim):
                            zhi[i] = zmid[i]
                    else:
                        t_lo = t_mid
                        for i in range(dim):
                            zbase[i] = zmid[i]
                        s_prev = s_mid
                t += t_hi
                for i in range(dim):
                    z[i] = zhi[i]
                done = True
                continue
            t += h
            for i in range(dim):
                z[i] = z5[i]
            s_prev = s_new
            nsteps += 1
            if en > 0.0:
                h *= fmin(5.0, fmax(0.2, 0.9 * pow(en, -0.2)))
            else:
                h *= 5.0
    out = np.empty(z0.shape[0])
    for i in range(z0.shape[0]):
        out[i] = z[i]
    return t, out, status

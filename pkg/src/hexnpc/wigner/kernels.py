"""Pointwise explicit-midpoint kernels for the three-wave coupling.

``coef[ix]`` is the real transverse grating factor (``2 chi cos(G_x x)``),
``e1``/``e2`` the longitudinal QPM phase at the start and middle of the step,
already multiplied by ``h/2`` and ``h``. Each kernel updates in place and
returns the largest ``|A|^2`` seen (NaN/inf propagate into it).
"""

from __future__ import annotations

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

__all__ = ["midpoint_undepleted", "midpoint_depleted", "HAVE_NUMBA"]

HAVE_NUMBA = numba is not None


def _undepleted_py(S, I, P, coef, a1, a2):
    K = P * coef[:, None, None]
    sm = S + a1 * K * np.conj(I)
    im = I + a1 * K * np.conj(S)
    S += a2 * K * np.conj(im)
    I += a2 * K * np.conj(sm)
    return float(max(np.max(np.abs(S) ** 2), np.max(np.abs(I) ** 2)))


def _depleted_py(S, I, P, coef, a1, a2, b1, b2):
    # b1, b2 = conj(a1), conj(a2): the pump couples to conj(kappa)
    c = coef[:, None, None]
    K = P * c
    sm = S + a1 * K * np.conj(I)
    im = I + a1 * K * np.conj(S)
    pm = P - b1 * c * S * I
    Km = pm * c
    S_new = S + a2 * Km * np.conj(im)
    I_new = I + a2 * Km * np.conj(sm)
    P -= b2 * c * sm * im
    S[...] = S_new
    I[...] = I_new
    return float(max(np.max(np.abs(S) ** 2), np.max(np.abs(I) ** 2), np.max(np.abs(P) ** 2)))


if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _undepleted_nb(S, I, P, coef, a1, a2):
        nx, ny, nt = S.shape
        peak = 0.0
        for ix in range(nx):
            c = coef[ix]
            for iy in range(ny):
                for it in range(nt):
                    k = P[ix, iy, it] * c
                    s = S[ix, iy, it]
                    i = I[ix, iy, it]
                    sm = s + a1 * k * np.conj(i)
                    im = i + a1 * k * np.conj(s)
                    s2 = s + a2 * k * np.conj(im)
                    i2 = i + a2 * k * np.conj(sm)
                    S[ix, iy, it] = s2
                    I[ix, iy, it] = i2
                    m = max(s2.real * s2.real + s2.imag * s2.imag,
                            i2.real * i2.real + i2.imag * i2.imag)
                    if not m <= peak:
                        peak = m
                        if m != m:  # NaN must stick, later cells compare False
                            return m
        return peak

    @numba.njit(cache=True, nogil=True)
    def _depleted_nb(S, I, P, coef, a1, a2, b1, b2):
        nx, ny, nt = S.shape
        peak = 0.0
        for ix in range(nx):
            c = coef[ix]
            for iy in range(ny):
                for it in range(nt):
                    s = S[ix, iy, it]
                    i = I[ix, iy, it]
                    p = P[ix, iy, it]
                    k = p * c
                    sm = s + a1 * k * np.conj(i)
                    im = i + a1 * k * np.conj(s)
                    pm = p - b1 * c * s * i
                    km = pm * c
                    s2 = s + a2 * km * np.conj(im)
                    i2 = i + a2 * km * np.conj(sm)
                    p2 = p - b2 * c * sm * im
                    S[ix, iy, it] = s2
                    I[ix, iy, it] = i2
                    P[ix, iy, it] = p2
                    m = max(s2.real * s2.real + s2.imag * s2.imag,
                            i2.real * i2.real + i2.imag * i2.imag,
                            p2.real * p2.real + p2.imag * p2.imag)
                    if not m <= peak:
                        peak = m
                        if m != m:
                            return m
        return peak


def midpoint_undepleted(S, I, P, coef, a1, a2, use_numba=True):
    dt = S.dtype.type
    a1, a2 = dt(a1), dt(a2)
    coef = coef.astype(S.real.dtype, copy=False)
    if use_numba and HAVE_NUMBA:
        return _undepleted_nb(S, I, P, coef, a1, a2)
    return _undepleted_py(S, I, P, coef, a1, a2)


def midpoint_depleted(S, I, P, coef, a1, a2, use_numba=True):
    dt = S.dtype.type
    b1, b2 = dt(np.conj(a1)), dt(np.conj(a2))
    a1, a2 = dt(a1), dt(a2)
    coef = coef.astype(S.real.dtype, copy=False)
    if use_numba and HAVE_NUMBA:
        return _depleted_nb(S, I, P, coef, a1, a2, b1, b2)
    return _depleted_py(S, I, P, coef, a1, a2, b1, b2)

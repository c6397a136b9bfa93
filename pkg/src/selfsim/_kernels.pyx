# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled series kernels.

Both kernels sum a hypergeometric-type series with the term-ratio
recurrence and share the stop rule of the pure-Python twin in
``_kernels_py``; results must agree with it to the last few ulps.
"""

from libc.math cimport fabs, isfinite
from libc.stdlib cimport malloc, free

import numpy as np


cdef inline bint _is_small(double term_abs, double prev_abs, double total,
                           double rel_tol) nogil:
    if term_abs > prev_abs:
        return False
    if total == 0.0:
        return term_abs <= 1e-300
    return 10.0 * term_abs <= rel_tol * fabs(total)


cdef inline double _ratio(const double[:] up, const double[:] low, double k) nogil:
    cdef Py_ssize_t i
    cdef double r = 1.0
    for i in range(up.shape[0]):
        r *= up[i] + k
    for i in range(low.shape[0]):
        r /= low[i] + k
    return r


def pfq_series(numerator, denominator, double x, double rel_tol,
               long max_terms, int consecutive):
    """Return ``(value, terms_used, last_abs_term, converged)``."""
    cdef const double[:] up = np.ascontiguousarray(numerator, dtype=np.float64)
    cdef const double[:] low = np.ascontiguousarray(denominator, dtype=np.float64)
    cdef double total = 1.0, term = 1.0, new_term = 1.0
    cdef long used = 1
    cdef long m = 0
    cdef int small = 0
    cdef bint converged = False
    with nogil:
        while used < max_terms:
            new_term = term * _ratio(up, low, <double>m) * x / (m + 1.0)
            m += 1
            total += new_term
            used += 1
            if not isfinite(total):
                break
            if _is_small(fabs(new_term), fabs(term), total, rel_tol):
                small += 1
                if small >= consecutive:
                    converged = True
                    break
            else:
                small = 0
            term = new_term
    return total, used, fabs(new_term), converged


def kdf_series(joint_up, x_up, y_up, joint_low, x_low, y_low,
               double x, double y, double rel_tol, long max_shells,
               int consecutive):
    """Double series summed over diagonal shells r + s = const.

    Returns ``(value, shells_used, last_shell_abs, converged)``.
    """
    cdef const double[:] ja = np.ascontiguousarray(joint_up, dtype=np.float64)
    cdef const double[:] xa = np.ascontiguousarray(x_up, dtype=np.float64)
    cdef const double[:] ya = np.ascontiguousarray(y_up, dtype=np.float64)
    cdef const double[:] jb = np.ascontiguousarray(joint_low, dtype=np.float64)
    cdef const double[:] xb = np.ascontiguousarray(x_low, dtype=np.float64)
    cdef const double[:] yb = np.ascontiguousarray(y_low, dtype=np.float64)
    cdef Py_ssize_t cap = max_shells + 2
    cdef double *row = <double *> malloc(cap * sizeof(double))
    cdef double *xf = <double *> malloc(cap * sizeof(double))
    cdef double *yf = <double *> malloc(cap * sizeof(double))
    if row == NULL or xf == NULL or yf == NULL:
        free(row); free(xf); free(yf)
        raise MemoryError()
    cdef double total = 1.0, shell_abs = 1.0, prev_abs = 1.0, jr, keep, v
    cdef long used = 1
    cdef Py_ssize_t s, i
    cdef int small = 0
    cdef bint converged = False
    try:
        with nogil:
            row[0] = 1.0
            s = 0
            while used < max_shells:
                # factors carrying shell s to shell s+1
                jr = _ratio(ja, jb, <double>s)
                xf[s] = _ratio(xa, xb, <double>s) * x / (s + 1.0)
                yf[s] = _ratio(ya, yb, <double>s) * y / (s + 1.0)
                keep = row[s]
                shell_abs = 0.0
                v = 0.0
                # row[i] holds T(i, s - i); update in place to T(i, s + 1 - i)
                for i in range(s + 1):
                    row[i] = row[i] * jr * yf[s - i]
                    shell_abs += fabs(row[i])
                    v += row[i]
                row[s + 1] = keep * jr * xf[s]
                shell_abs += fabs(row[s + 1])
                v += row[s + 1]
                s += 1
                total += v
                used += 1
                if not isfinite(total):
                    break
                if _is_small(shell_abs, prev_abs, total, rel_tol):
                    small += 1
                    if small >= consecutive:
                        converged = True
                        break
                else:
                    small = 0
                prev_abs = shell_abs
    finally:
        free(row); free(xf); free(yf)
    return total, used, shell_abs, converged

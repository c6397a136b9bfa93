"""Pure-Python series kernels; same contract as the compiled ``_kernels``."""

import math


def _is_small(term_abs, prev_abs, total, rel_tol):
    if term_abs > prev_abs:
        return False
    if total == 0.0:
        return term_abs <= 1e-300
    return 10.0 * term_abs <= rel_tol * abs(total)


def _ratio(up, low, k):
    r = 1.0
    for a in up:
        r *= a + k
    for c in low:
        r /= c + k
    return r


def pfq_series(numerator, denominator, x, rel_tol, max_terms, consecutive):
    """Return ``(value, terms_used, last_abs_term, converged)``."""
    up = [float(a) for a in numerator]
    low = [float(c) for c in denominator]
    total = term = new_term = 1.0
    used = 1
    m = 0
    small = 0
    converged = False
    while used < max_terms:
        new_term = term * _ratio(up, low, float(m)) * x / (m + 1.0)
        m += 1
        total += new_term
        used += 1
        if not math.isfinite(total):
            break
        if _is_small(abs(new_term), abs(term), total, rel_tol):
            small += 1
            if small >= consecutive:
                converged = True
                break
        else:
            small = 0
        term = new_term
    return total, used, abs(new_term), converged


def kdf_series(joint_up, x_up, y_up, joint_low, x_low, y_low,
               x, y, rel_tol, max_shells, consecutive):
    """Double series summed over diagonal shells r + s = const.

    Returns ``(value, shells_used, last_shell_abs, converged)``.
    """
    ja, xa, ya = list(joint_up), list(x_up), list(y_up)
    jb, xb, yb = list(joint_low), list(x_low), list(y_low)
    row = [1.0]
    xf = []
    yf = []
    total = shell_abs = prev_abs = 1.0
    used = 1
    s = 0
    small = 0
    converged = False
    while used < max_shells:
        jr = _ratio(ja, jb, float(s))
        xf.append(_ratio(xa, xb, float(s)) * x / (s + 1.0))
        yf.append(_ratio(ya, yb, float(s)) * y / (s + 1.0))
        last = row[s] * jr * xf[s]
        row = [row[i] * jr * yf[s - i] for i in range(s + 1)]
        row.append(last)
        shell_abs = sum(abs(v) for v in row)
        total += sum(row)
        s += 1
        used += 1
        if not math.isfinite(total):
            break
        if _is_small(shell_abs, prev_abs, total, rel_tol):
            small += 1
            if small >= consecutive:
                converged = True
                break
        else:
            small = 0
        prev_abs = shell_abs
    return total, used, shell_abs, converged

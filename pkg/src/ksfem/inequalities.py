"""Elementary inequalities behind the discrete energy estimates.

Each function returns the slack ``rhs - lhs``; a nonnegative result means the
inequality holds for the given arguments.
"""
import numpy as np

from .scheme import bracket, tau_ji


def log_square_slack(x, y):
    """``(x - y)^2 / (x y) - (log x - log y)^2`` for ``x, y > 0``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (x - y) ** 2 / (x * y) - (np.log(x) - np.log(y)) ** 2


def saturation_slack(x, y):
    """``|log(1+x) - log(1+y)| - |y/(1+y) - x/(1+x)|`` for ``x, y > 0``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.abs(np.log1p(x) - np.log1p(y)) - np.abs(y / (1 + y) - x / (1 + x))


def normalized_sum_slack(a, b):
    """Slack of the normalized-sum estimate for two real sequences.

    ``2 sum|a - b| / sum|a| - |sum a / sum|a| - sum b / sum|b||``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = np.abs(a).sum(), np.abs(b).sum()
    if na == 0 or nb == 0:
        raise ValueError("sequences must not vanish identically")
    return 2.0 * np.abs(a - b).sum() / na - abs(a.sum() / na - b.sum() / nb)


def tau_bound_slack(u_i, u_j, p=None):
    """Pair ``(tau, sqrt((1+u_i)(1+u_j)) - tau)``; both entries are nonnegative."""
    tau = np.asarray(tau_ji(u_i, u_j, p))
    upper = np.sqrt((1.0 + np.asarray(u_i)) * (1.0 + np.asarray(u_j)))
    return tau, upper - tau


def bracket_slack(u_i, u_j, p=None):
    """``1 - |(u_i - tau_ji) / (u_j - u_i)|``."""
    return 1.0 - np.abs(np.asarray(bracket(u_i, u_j, p)))

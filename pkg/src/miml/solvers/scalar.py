"""1-d convex minimization by golden-section bracketing."""

import math

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def minimize_1d_convex(g, lo: float, hi: float, tol: float = 1e-6) -> float:
    """Argmin of a convex function on [lo, hi] to within tol.

    Monotone functions converge to the corresponding boundary.
    """
    if lo > hi:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    a, b = float(lo), float(hi)
    if b - a <= tol:
        return (a + b) / 2.0
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    g1, g2 = g(x1), g(x2)
    while b - a > tol:
        if g1 <= g2:
            b, x2, g2 = x2, x1, g1
            x1 = b - _INVPHI * (b - a)
            g1 = g(x1)
        else:
            a, x1, g1 = x1, x2, g2
            x2 = a + _INVPHI * (b - a)
            g2 = g(x2)
    return (a + b) / 2.0

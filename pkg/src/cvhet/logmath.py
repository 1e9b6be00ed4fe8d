"""Log-space combinatorics.

All factorials and binomial coefficients in this package go through
log-gamma: the constants appearing in the confidence bounds (C_kl, C_psi,
binomials with arguments up to 10^12) overflow any direct product long
before the bounds themselves stop being meaningful.  Direct integer
products are used only for arguments <= 20, where they are exact.
"""

import math

_DIRECT_LIMIT = 20

LOG2 = math.log(2.0)


def log_factorial(n):
    """ln(n!) for a non-negative integer (or float) n."""
    if n < 0:
        raise ValueError(f"factorial of negative argument {n}")
    return math.lgamma(n + 1.0)


def log_binom(n, k):
    """ln C(n, k); 0 <= k <= n.  Handles n up to ~1e300 via lgamma."""
    if k < 0 or k > n:
        raise ValueError(f"binomial ({n}, {k}) outside 0 <= k <= n")
    return math.lgamma(n + 1.0) - math.lgamma(k + 1.0) - math.lgamma(n - k + 1.0)


def binom(n, k):
    """C(n, k) as a float; exact (integer arithmetic) for n <= 20."""
    if k < 0 or k > n:
        return 0.0
    if n <= _DIRECT_LIMIT:
        return float(math.comb(int(n), int(k)))
    return math.exp(log_binom(n, k))


def sqrt_binom(n, k):
    """sqrt(C(n, k)) evaluated as exp(log_binom / 2)."""
    if n <= _DIRECT_LIMIT:
        return math.sqrt(math.comb(int(n), int(k)))
    return math.exp(0.5 * log_binom(n, k))

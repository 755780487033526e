"""Independent reference implementations used by the test-suite.

Each one follows the textbook definition directly (pair enumeration, exact
rational arithmetic, numerical integration) and shares no code with the
package.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

from scipy import integrate


def brute_tau(a, b):
    """Return (concordant, discordant, ties_a, ties_b, ties_both, tau_b or None) by enumerating pairs."""
    c = d = ta = tb = tab = 0
    for i, j in combinations(range(len(a)), 2):
        da, db = a[i] - a[j], b[i] - b[j]
        if da == 0 and db == 0:
            ta += 1
            tb += 1
            tab += 1
        elif da == 0:
            ta += 1
        elif db == 0:
            tb += 1
        elif (da > 0) == (db > 0):
            c += 1
        else:
            d += 1
    n0 = len(a) * (len(a) - 1) // 2
    den = (n0 - ta) * (n0 - tb)
    tau_b = None if den == 0 else (c - d) / math.sqrt(den)
    return c, d, ta, tb, tab, tau_b


def eq1(x: dict, y: dict):
    """Centered time correlation over common keys, evaluated in exact rationals."""
    years = sorted(set(x) & set(y))
    xs = [Fraction(x[t]) for t in years]
    ys = [Fraction(y[t]) for t in years]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    num = sum((u - mx) * (v - my) for u, v in zip(xs, ys))
    sxx = sum((u - mx) ** 2 for u in xs)
    syy = sum((v - my) ** 2 for v in ys)
    if sxx == 0 or syy == 0:
        return None
    c2 = num * num / (sxx * syy)
    return math.copysign(math.sqrt(c2), num) if num else 0.0


def _student_t_pdf(t: float, nu: float) -> float:
    logc = math.lgamma((nu + 1) / 2) - math.lgamma(nu / 2) - 0.5 * math.log(nu * math.pi)
    return math.exp(logc - (nu + 1) / 2 * math.log1p(t * t / nu))


def welch(a, b):
    """Two-sided Welch t-test: (t, df, p). The tail probability is integrated numerically."""
    na, nb = len(a), len(b)
    ma, mb = sum(a) / na, sum(b) / nb
    va = sum((v - ma) ** 2 for v in a) / (na - 1)
    vb = sum((v - mb) ** 2 for v in b) / (nb - 1)
    se2 = va / na + vb / nb
    t = (mb - ma) / math.sqrt(se2)
    df = se2 ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    tail, _ = integrate.quad(_student_t_pdf, abs(t), math.inf, args=(df,), epsabs=1e-14, epsrel=1e-12)
    return t, df, 2 * tail

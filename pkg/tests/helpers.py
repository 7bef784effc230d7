import math

import numpy as np
from scipy import integrate

from hardalign.distributions import BinConcreteParams, binconcrete_log_density


def density_mass(log_alpha, lam, upper=0.5):
    """Integral of the density over (0, upper), upper <= 0.5.

    Near 0 the density behaves like x^(lam-1); p(x) / x^(lam-1) is integrated
    against QUADPACK's algebraic weight.
    """
    def smooth(x):
        if x == 0.0:
            return lam * math.exp(-log_alpha)
        return math.exp(binconcrete_log_density(x, BinConcreteParams(log_alpha, lam)) - (lam - 1) * math.log(x))

    return integrate.quad(smooth, 0, upper, weight="alg", wvar=(lam - 1, 0.0), limit=500,
                          epsabs=1e-13, epsrel=1e-12)[0]


def total_mass(log_alpha, lam):
    # (0.5, 1) is folded onto (0, 0.5) by x -> 1-x, alpha -> 1/alpha
    return density_mass(log_alpha, lam) + density_mass(-log_alpha, lam)


# (criterion, passed, detail) rows collected by test_acceptance.py
ACCEPTANCE_RESULTS = []


def record(criterion, passed, detail):
    ACCEPTANCE_RESULTS.append((criterion, bool(passed), detail))
    return passed

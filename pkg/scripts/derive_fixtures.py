#!/usr/bin/env python3
"""Independent recomputation of the worked theory fixtures.

Deliberately avoids the package: eigenvalues come from the 2x2
characteristic polynomial in exact arithmetic, the stride bound from a
high-precision integer scan of the defining inequality, and the horizon
bound from a brute-force scan of its self-referential inequality.  The
printed values are pinned in tests/test_acceptance.py.
"""

import mpmath as mp

mp.mp.dps = 50


def min_eig_2x2(a, b, d):
    """Smallest eigenvalue of [[a, b], [b, d]] via the quadratic formula."""
    half_trace = (a + d) / 2
    return half_trace - mp.sqrt(((a - d) / 2) ** 2 + b**2)


def threshold_fixture():
    # Input matrix with columns e1, e2, e1+e2; defect 0, strong convexity 1,
    # normalizer 1.  Grams after zeroing each column, entered by hand:
    #   drop col 1 -> rows (0,0,1),(0,1,1): G = [[1,1],[1,2]]
    #   drop col 2 -> rows (1,0,1),(0,0,1): G = [[2,1],[1,1]]
    #   drop col 3 -> identity
    eigs = [min_eig_2x2(1, 1, 2), min_eig_2x2(2, 1, 1), mp.mpf(1)]
    beta = mp.mpf(1)
    reward = mp.mpf("0.6") * min(min(beta, mp.sqrt(e)) for e in eigs)
    return reward


def stride_fixture(theta):
    contraction = mp.mpf("0.5")
    c = mp.mpf(1)
    T, p, delta = 500, 3, mp.mpf("0.05")
    frob = mp.mpf(2)
    smooth = mp.mpf(1)
    inner = (
        (c**2 / theta**2)
        * mp.log(2 * (T - 1) * (p + 1) / delta)
        * (smooth * frob / (1 - contraction)) ** 2
    )
    rhs = 1 + mp.log(inner) / mp.log(1 / contraction)
    for L in range(1, 10_000):
        if L >= rhs:
            return L, rhs
    raise AssertionError("no stride found")


def horizon_fixture():
    eta, dim, L, delta, c2 = mp.mpf(3), 60, 12, mp.mpf("0.05"), mp.mpf(1)
    moment = max(eta**2, mp.mpf(9))

    def rhs(T):
        return c2 * (moment * dim * L * mp.log(mp.e * T / (L * dim)) + mp.log(8 * L / delta))

    T = dim * L
    while T < 10_000_000:
        if T >= rhs(T):
            return T
        T += 1
    raise AssertionError("no horizon found")


if __name__ == "__main__":
    theta = threshold_fixture()
    print(f"threshold fixture: {mp.nstr(theta, 17)}")
    L, rhs = stride_fixture(theta)
    print(f"stride fixture: L_min = {L}  (rhs = {mp.nstr(rhs, 17)})")
    T = horizon_fixture()
    print(f"horizon fixture: T_min = {T}")

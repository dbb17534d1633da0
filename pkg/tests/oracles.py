"""Independent reference computations used as test oracles.

Nothing here calls into dualis; each oracle is a different algorithm from
the one under test.
"""
import itertools
import math

import numpy as np


def count_below(A, x):
    """Eigenvalues of Hermitian ``A`` below ``x``: negative pivots of an LDL^H sweep (Sylvester)."""
    M = np.array(A, dtype=complex) - x * np.eye(len(A))
    n = len(M)
    neg = 0
    for k in range(n):
        piv = M[k, k].real
        if piv == 0.0:
            piv = -1e-300
        if piv < 0:
            neg += 1
        if k + 1 < n:
            col = M[k + 1:, k] / piv
            M[k + 1:, k + 1:] -= np.outer(col, M[k, k + 1:])
    return neg


def bisection_eigenvalues(A, tol=1e-12):
    n = len(A)
    radius = float(np.max(np.sum(np.abs(A), axis=1)))  # Gershgorin
    out = []
    for k in range(n):
        lo, hi = -radius - 1.0, radius + 1.0
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if count_below(A, mid) > k:
                hi = mid
            else:
                lo = mid
        out.append(0.5 * (lo + hi))
    return np.array(out)


def taylor_expm(A, s, terms=20):
    A = np.array(A, dtype=complex) * s
    out = np.eye(len(A), dtype=complex)
    term = np.eye(len(A), dtype=complex)
    for k in range(1, terms + 1):
        term = term @ A / k
        out = out + term
    return out


def shannon_nats(values):
    return -sum(v * math.log(v) for v in values if v > 0)


def ising_histogram_brute(rows, cols):
    """Energy histogram (J = 1) by looping over every configuration and every bond."""
    bonds = []
    for r in range(rows):
        for c in range(cols):
            s = r * cols + c
            bonds.append((s, r * cols + (c + 1) % cols))
            bonds.append((s, ((r + 1) % rows) * cols + c))
    hist = {}
    for spins in itertools.product((1, -1), repeat=rows * cols):
        e = -sum(spins[a] * spins[b] for a, b in bonds)
        hist[e] = hist.get(e, 0) + 1
    return hist


def ising_z_brute(rows, cols, K):
    return math.fsum(c * math.exp(-K * e) for e, c in ising_histogram_brute(rows, cols).items())

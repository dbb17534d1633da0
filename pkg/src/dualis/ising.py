"""Exact 2D Ising partition functions on small tori and the Kramers-Wannier duality."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Tuple

import numpy as np

from .duality import DualityMap, KramersWannier
from .errors import (
    DomainError,
    InvariantError,
    Overflow,
    RegimeViolation,
    SingularState,
    TooLarge,
)
from .opscore import EXP_LIMIT, as_hermitian, eig_hermitian, operator_norm, trace_norm
from .reports import Report
from .serialize import format_float

MAX_SITES = 25
SELF_DUAL_K = 0.5 * math.log1p(math.sqrt(2.0))
LOW_T_MIN_K = 1.0
HIGH_T_MAX_K = 0.2


@dataclass(frozen=True)
class IsingLattice:
    """Periodic ``rows x cols`` lattice with ferromagnetic coupling ``J``.

    Every site owns a right bond and a down bond, so there are ``2N`` bonds.
    A side of length 2 doubles bonds and a side of length 1 turns them into
    self-loops that can never be broken.
    """

    rows: int
    cols: int
    J: float = 1.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InvariantError("lattice sides must be positive")
        if self.rows * self.cols > MAX_SITES:
            raise TooLarge(f"{self.rows}x{self.cols} exceeds {MAX_SITES} sites")
        if not self.J > 0:
            raise InvariantError("J must be positive")

    @property
    def N(self) -> int:
        return self.rows * self.cols

    @property
    def n_bonds(self) -> int:
        return 2 * self.N

    def bonds(self) -> list:
        """Bond list as ``(site, site)`` pairs, sites numbered row-major."""
        out = []
        for r in range(self.rows):
            for c in range(self.cols):
                s = r * self.cols + c
                out.append((s, r * self.cols + (c + 1) % self.cols))
                out.append((s, ((r + 1) % self.rows) * self.cols + c))
        return out

    @classmethod
    def parse(cls, text: str, J: float = 1.0) -> "IsingLattice":
        try:
            r, c = (int(x) for x in text.lower().split("x"))
        except ValueError as exc:
            raise InvariantError(f"lattice must look like 4x4, got {text!r}") from exc
        return cls(r, c, J)


@dataclass(frozen=True)
class ThermalPoint:
    beta: float
    K: float

    def __post_init__(self):
        if not (self.beta > 0 and self.K > 0):
            raise DomainError("beta and K must be positive")

    @classmethod
    def of(cls, J: float, beta: float) -> "ThermalPoint":
        return cls(beta, J * beta)


@dataclass(frozen=True)
class EnergyHistogram:
    """Counts of configurations by number of broken bonds."""

    broken: Tuple[int, ...]
    counts: Tuple[int, ...]
    n_bonds: int
    J: float

    @property
    def energies(self) -> np.ndarray:
        return -self.J * (self.n_bonds - 2 * np.asarray(self.broken, dtype=float))

    def as_dict(self) -> dict:
        return {float(e): int(c) for e, c in zip(self.energies, self.counts)}

    def to_json(self) -> dict:
        return {"energies": [float(e) for e in self.energies], "counts": list(self.counts)}


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.int64)
    c = np.zeros_like(x)
    while np.any(x):
        c += x & 1
        x >>= 1
    return c


@lru_cache(maxsize=None)
def _broken_histogram(rows: int, cols: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    # Rows of the torus are bit words of width W; a bond is broken where
    # neighbouring bits differ, so horizontal breaks are popcount(r ^ rot(r))
    # and vertical breaks between rows are popcount(r_i ^ r_{i+1}).  The
    # shorter side is the word width, which keeps the pair table small.
    W, R = min(rows, cols), max(rows, cols)
    words = np.arange(1 << W, dtype=np.int64)
    rot = ((words << 1) | (words >> (W - 1))) & ((1 << W) - 1)
    horiz = _popcount(words ^ rot).astype(np.int8)
    vert = _popcount(words[:, None] ^ words[None, :]).astype(np.int8)
    total = np.zeros(2 * R * W + 1, dtype=np.int64)
    for r0 in range(1 << W):
        if R == 1:
            acc = np.array(horiz[r0] + vert[r0, r0], dtype=np.int8)
        else:
            k = R - 1
            shape = lambda axis: tuple(-1 if a == axis else 1 for a in range(k))  # noqa: E731
            acc = np.full((1,) * k, horiz[r0] + 0, dtype=np.int8)
            acc = acc + vert[r0].reshape(shape(0))
            for a in range(k):
                acc = acc + horiz.reshape(shape(a))
            for a in range(k - 1):
                acc = acc + vert.reshape(tuple(1 << W if b in (a, a + 1) else 1 for b in range(k)))
            acc = acc + vert[:, r0].reshape(shape(k - 1))
        total += np.bincount(acc.ravel().astype(np.intp), minlength=total.size)
    nz = np.nonzero(total)[0]
    return tuple(int(b) for b in nz), tuple(int(total[b]) for b in nz)


def enumerate_energies(lat: IsingLattice) -> EnergyHistogram:
    """Exhaustive energy histogram over all ``2^N`` spin configurations."""
    broken, counts = _broken_histogram(lat.rows, lat.cols)
    return EnergyHistogram(broken, counts, lat.n_bonds, lat.J)


def log_partition_at(lat: IsingLattice, K: float) -> float:
    """``ln Z`` at dimensionless coupling ``K``, computed without overflow."""
    if not K > 0:
        raise DomainError("K must be positive")
    h = enumerate_energies(lat)
    expo = [K * (h.n_bonds - 2 * b) for b in h.broken]
    top = max(expo)
    return top + math.log(math.fsum(c * math.exp(e - top) for c, e in zip(h.counts, expo)))


def partition_at(lat: IsingLattice, K: float) -> float:
    h = enumerate_energies(lat)
    if K * h.n_bonds > EXP_LIMIT:
        raise Overflow(f"Z overflows at K = {K}")
    return math.exp(log_partition_at(lat, K))


def partition_function(lat: IsingLattice, pt: ThermalPoint) -> float:
    """``Z = sum_E count(E) e^{-beta E}``."""
    if abs(pt.K - lat.J * pt.beta) > 1e-12 * pt.K:
        raise InvariantError("thermal point does not match the lattice coupling")
    h = enumerate_energies(lat)
    if pt.beta * float(np.max(np.abs(h.energies))) > EXP_LIMIT:
        raise Overflow(f"Z overflows at beta = {pt.beta}")
    return math.fsum(c * math.exp(-pt.beta * e) for c, e in zip(h.counts, h.energies))


# ---------------------------------------------------------------------------
# Duality condition
# ---------------------------------------------------------------------------

def dual_coupling(K: float) -> float:
    """``-1/2 ln tanh K``, evaluated as ``atanh(e^{-2K})``."""
    if not (K > 0 and math.isfinite(K)):
        raise DomainError("dual coupling needs finite K > 0")
    return math.atanh(math.exp(-2.0 * K))


def self_dual_coupling(tol: float = 1e-16) -> float:
    """Fixed point of the dual coupling, by bisection on ``D(K) - K``.

    Plain iteration of ``D`` only oscillates, since ``D`` is an involution.
    """
    lo, hi = 0.1, 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if dual_coupling(mid) > mid:
            lo = mid
        else:
            hi = mid
        if mid in (lo, hi) and hi - lo <= 4 * math.ulp(mid):
            break
    return 0.5 * (lo + hi)


def kw_relation_residual(lat: IsingLattice, K: float) -> Tuple[float, float]:
    """Finite-lattice residuals of the free-energy and partition-function duality relations.

    ``residual_f = |ln Z(K)/N - ln Z(K~)/N - ln sinh 2K|`` and
    ``residual_Z = |Z(K~) sinh(2K)^N / Z(K) - 1|``.
    """
    Kd = dual_coupling(K)
    N = lat.N
    lz, lzd = log_partition_at(lat, K), log_partition_at(lat, Kd)
    lsinh = math.log(math.sinh(2.0 * K))
    res_f = abs(-lzd / N + lz / N - lsinh)
    res_z = abs(math.expm1(lzd + N * lsinh - lz))
    return res_f, res_z


def coupling_from_norm(H, n_sites: int) -> float:
    """``J = ||H|| / (2 n (n - 1))`` for a full Ising Hamiltonian on ``n`` sites."""
    if n_sites < 2:
        raise InvariantError("need at least two sites")
    return operator_norm(H) / (2 * n_sites * (n_sites - 1))


def kw_duality_map(J: float, beta: float, n: int = 2) -> Tuple[DualityMap, Callable[[float], float]]:
    """Strong-weak map ``H -> f H`` on dimension ``n`` plus the temperature map ``b -> D(J b) / J``."""
    if not (J > 0 and beta > 0):
        raise DomainError("J and beta must be positive")
    phi = DualityMap(n, 1, 0, np.eye(n), KramersWannier(J, beta))

    def temperature_map(b: float) -> float:
        return dual_coupling(J * b) / J

    return phi, temperature_map


def _gibbs(H: np.ndarray, beta: float) -> np.ndarray:
    w, v = eig_hermitian(H)
    p = np.exp(-beta * (w - w[0]))
    return (v * (p / p.sum())) @ v.conj().T


def gibbs_state_map_check(J: float, beta: float, H, exponent_sign: int, tol: float = 1e-9) -> Report:
    """Trace distance between the mapped Gibbs state and the Gibbs state of the scaled dual.

    The map is ``rho -> rho^x / Tr rho^x`` with ``x = sign * ln tanh(J beta) / (2 J beta)``;
    ``sign = +1`` is the literal exponent, which is ``-f``.  The target is
    ``e^{-beta f H} / Z``.  Both signs' distances are reported.
    """
    if exponent_sign not in (1, -1):
        raise InvariantError("exponent_sign must be +1 or -1")
    if not (J > 0 and beta > 0):
        raise DomainError("J and beta must be positive")
    H = as_hermitian(H)
    f = KramersWannier(J, beta).constant_value
    rho = _gibbs(H.matrix, beta)
    w, v = eig_hermitian(rho)
    if w[0] <= 0:
        raise SingularState("Gibbs state has a zero eigenvalue, its power is undefined")
    target = _gibbs(H.matrix, beta * f)
    dist = {}
    for sign in (1, -1):
        x = -sign * f
        mapped = (v * w ** x) @ v.conj().T
        mapped /= np.trace(mapped).real
        dist[sign] = 0.5 * trace_norm(0.5 * (mapped - target + (mapped - target).conj().T))
    chosen = dist[exponent_sign]
    return Report("gibbs_state_map", chosen <= tol, chosen, tol,
                  {"distance_literal": dist[1], "distance_flipped": dist[-1],
                   "consistent_sign": 1 if dist[1] <= dist[-1] else -1, "f": f})


def expansion_leading_terms(K: float, N: int, regime: str) -> float:
    """Truncated low- or high-temperature series for ``Z`` on an ``N``-site torus.

    low (``K >= 1``): ``2 e^{2NK} (1 + N e^{-8K} + 2N e^{-12K})``;
    high (``K <= 0.2``): ``2^N cosh(K)^{2N} (1 + N tanh(K)^4)``.
    """
    if N < 1:
        raise InvariantError("N must be positive")
    if regime == "low":
        if K < LOW_T_MIN_K:
            raise RegimeViolation(f"low-temperature series needs K >= {LOW_T_MIN_K}")
        return 2.0 * math.exp(2 * N * K) * (1 + N * math.exp(-8 * K) + 2 * N * math.exp(-12 * K))
    if regime == "high":
        if not 0 < K <= HIGH_T_MAX_K:
            raise RegimeViolation(f"high-temperature series needs 0 < K <= {HIGH_T_MAX_K}")
        return 2.0 ** N * math.cosh(K) ** (2 * N) * (1 + N * math.tanh(K) ** 4)
    raise InvariantError(f"regime must be 'low' or 'high', got {regime!r}")


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = ("K", "K_dual", "Z", "Z_dual", "residual_f", "residual_Z")


def kw_sweep(lat: IsingLattice, Ks: Iterable[float]) -> list:
    rows = []
    for K in Ks:
        Kd = dual_coupling(K)
        rf, rz = kw_relation_residual(lat, K)
        rows.append({"K": K, "K_dual": Kd, "Z": partition_at(lat, K), "Z_dual": partition_at(lat, Kd),
                     "residual_f": rf, "residual_Z": rz})
    return rows


def sweep_csv(rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow([format_float(float(r[c])) for c in SWEEP_COLUMNS])
    return buf.getvalue()

"""Thermal and entropic characterisations of duality maps and spectrum recovery from power sums."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .duality import (
    Constant,
    DualityMap,
    StateMap,
    apply_map,
    apply_state_map,
    _check_distribution,
)
from .errors import (
    DimIncompatible,
    DimMismatch,
    InvariantError,
    NonConvergence,
    NonRealRoot,
    WrongScaling,
)
from .opscore import (
    DensityState,
    as_hermitian,
    block_diag,
    eigvalsh,
    hermitian_part,
    operator_norm,
    random_state,
    random_unitary,
    rng_for,
    trace_exp,
    von_neumann_entropy,
)
from .reports import Report, within

ENTROPY_TOL = 1e-9
ROOT_IMAG_TOL = 1e-7
DK_MAX_ITER = 10_000
PEEL_RTOL = 1e-4


# ---------------------------------------------------------------------------
# Thermal axiom
# ---------------------------------------------------------------------------

def partition_equality(spec_a, spec_b, f: float, alpha: float, charges: Sequence[float],
                       tol: float = 1e-8, name: str = "partition_equality") -> Report:
    """Relative gap between ``alpha Tr e^{-J f A}`` and ``Tr e^{-J B}`` at each charge ``J``.

    Works on spectra, so it can test operator pairs that no map produced.
    """
    spec_a = np.asarray(spec_a, dtype=float)
    spec_b = np.asarray(spec_b, dtype=float)
    if len(charges) == 0:
        raise InvariantError("at least one charge is required")
    worst, worst_J = 0.0, None
    per_charge = []
    for J in charges:
        if not J > 0:
            raise InvariantError("charges must be positive")
        lhs = alpha * trace_exp(spec_a, -J * f)
        rhs = trace_exp(spec_b, -J)
        rel = abs(lhs - rhs) / abs(rhs)
        per_charge.append(rel)
        if rel > worst or worst_J is None:
            worst, worst_J = rel, float(J)
    return within(name, worst, tol, worst_charge=worst_J, relative_errors=per_charge)


def verify_thermal_axiom(phi: DualityMap, A, charges: Sequence[float], tol: float = 1e-8) -> Report:
    """``(p+q) Tr e^{-J f(A) A} == Tr e^{-J Phi(A)}`` at every charge, relative tolerance."""
    A = as_hermitian(A)
    if A.dim != phi.n:
        raise DimMismatch(f"operator has dim {A.dim}, map expects {phi.n}")
    return partition_equality(eigvalsh(A), eigvalsh(apply_map(phi, A)), phi.f(A), phi.alpha,
                              charges, tol, name="thermal_axiom")


def charge_grid(count: int = 12, low: float = 0.1, high: float = 5.0) -> np.ndarray:
    """Log-spaced charges, the default grid for thermal checks."""
    return np.geomspace(low, high, count)


# ---------------------------------------------------------------------------
# Power sums and spectrum recovery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerSumSequence:
    """``m_k = sum_j mu_j^k`` for ``k = 1..P`` of a spectrum duplicated ``x/y``-fold."""

    alpha: Tuple[int, int]
    sums: Tuple[float, ...]

    def __post_init__(self):
        frac = Fraction(int(self.alpha[0]), int(self.alpha[1]))
        if frac <= 0:
            raise InvariantError("alpha must be positive")
        sums = tuple(float(s) for s in self.sums)
        if not sums or not all(math.isfinite(s) for s in sums):
            raise InvariantError("power sums must be a nonempty finite sequence")
        object.__setattr__(self, "alpha", (frac.numerator, frac.denominator))
        object.__setattr__(self, "sums", sums)

    @property
    def P(self) -> int:
        return len(self.sums)

    def to_json(self) -> dict:
        return {"alpha": list(self.alpha), "sums": list(self.sums)}

    @classmethod
    def from_json(cls, d: dict) -> "PowerSumSequence":
        try:
            return cls(tuple(d["alpha"]), tuple(d["sums"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvariantError(f"malformed power-sum JSON: {exc}") from exc


def power_sums(spec, P: int, alpha: Tuple[int, int] = (1, 1)) -> PowerSumSequence:
    """Power sums of a sorted spectrum, accumulated left to right."""
    if P < 1:
        raise InvariantError("P must be at least 1")
    vals = np.sort(np.asarray(spec, dtype=float))
    sums = []
    for k in range(1, P + 1):
        acc = 0.0
        for v in vals:
            acc += v ** k
        sums.append(acc)
    return PowerSumSequence(alpha, tuple(sums))


def newton_girard(m: Sequence[float]) -> np.ndarray:
    """Elementary symmetric polynomials ``e_0..e_d`` from power sums ``m_1..m_d``."""
    d = len(m)
    e = np.zeros(d + 1)
    e[0] = 1.0
    for k in range(1, d + 1):
        acc = 0.0
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * m[i - 1]
        e[k] = acc / k
    return e


def durand_kerner(coeffs: np.ndarray, max_iter: int = DK_MAX_ITER) -> np.ndarray:
    """All roots of the monic polynomial ``z^d + c_1 z^{d-1} + ... + c_d``."""
    c = np.asarray(coeffs, dtype=complex)
    d = len(c) - 1
    if d == 0:
        return np.zeros(0, dtype=complex)
    radius = 1.0 + float(np.max(np.abs(c[1:])))
    z = radius * (0.4 + 0.9j) ** np.arange(d)
    abs_c = np.abs(c)
    for _ in range(max_iter):
        prev = z.copy()
        for i in range(d):
            diff = z[i] - np.delete(z, i)
            z[i] = z[i] - np.polyval(c, z[i]) / np.prod(diff)
        if np.max(np.abs(z - prev)) <= 1e-12 * max(1.0, float(np.max(np.abs(z)))):
            return z
        # stop once every residual sits inside the rounding error of Horner's rule
        noise = 4 * d * np.finfo(float).eps * np.polyval(abs_c, np.abs(z))
        if np.all(np.abs(np.polyval(c, z)) <= noise):
            return z
    raise NonConvergence(f"Durand-Kerner did not settle in {max_iter} iterations")


def _newton_polish(c: np.ndarray, x: float, steps: int = 3) -> float:
    dc = np.polyder(c)
    for _ in range(steps):
        slope = np.polyval(dc, x)
        if slope == 0:
            break
        step = np.polyval(c, x) / slope
        if not math.isfinite(step):
            break
        x -= step
    return x


def reconstruct_spectrum(ps: PowerSumSequence, d: int, polish: bool = True) -> np.ndarray:
    """Recover ``d`` real values whose power sums are ``ps.sums / alpha``.

    Newton-Girard gives the characteristic polynomial, Durand-Kerner its
    roots; roots must be real to 1e-7 before they are projected onto the
    real line.
    """
    if d < 1 or ps.P < d:
        raise InvariantError(f"need 1 <= d <= P, got d={d}, P={ps.P}")
    x, y = ps.alpha
    m = np.asarray(ps.sums[:d]) * y / x
    e = newton_girard(m)
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.all(np.abs(e[1:]) <= 1e-15 * scale):
        return np.zeros(d)
    coeffs = np.array([(-1) ** k * e[k] for k in range(d + 1)])
    roots = durand_kerner(coeffs)
    imag = np.abs(roots.imag)
    if np.any(imag > ROOT_IMAG_TOL * np.maximum(1.0, np.abs(roots))):
        raise NonRealRoot(f"root with imaginary part {float(np.max(imag)):.3e}; "
                          "power sums are not those of a real spectrum")
    real = roots.real
    if polish:
        real = np.array([_newton_polish(coeffs.real, r) for r in real])
    return np.sort(real)


# ---------------------------------------------------------------------------
# Finite-order l-infinity peel
# ---------------------------------------------------------------------------

def verify_peel_linf(spec_a, spec_dual, f: float, alpha: Tuple[int, int], P_even: int) -> Report:
    """Replay the peel argument for proportional spectra at finite order.

    Both spectra are duplicated to a common length (``x`` copies of each
    ``f lambda``, ``y`` copies of each ``mu``).  While elements remain, the
    ``2 rho``-norms of the two vectors must agree and the largest-magnitude
    elements must agree; the largest pair is then removed.  A sign-blind
    match is finally checked against the linear sums, which differ whenever
    some element has the wrong sign.
    """
    if P_even < 8 or P_even % 2:
        raise InvariantError("P_even must be even and at least 8")
    frac = Fraction(int(alpha[0]), int(alpha[1]))
    x, y = frac.numerator, frac.denominator
    lam = np.asarray(spec_a, dtype=float)
    mu = np.asarray(spec_dual, dtype=float)
    if x * lam.size != y * mu.size:
        raise DimIncompatible(f"{x} x {lam.size} != {y} x {mu.size}")
    lp = np.repeat(f * np.sort(lam), x)
    mp = np.repeat(np.sort(mu), y)
    rho = P_even // 2
    scale = max(1e-300, float(np.max(np.abs(lp), initial=0.0)), float(np.max(np.abs(mp), initial=0.0)))
    details = {"x": x, "y": y, "order": P_even, "integer_alpha": y == 1}

    # relative 2rho-norm estimate of the max element against the true max, first step
    m2r = float(np.sum((mp / scale) ** (2 * rho)))
    details["linf_estimate"] = scale * m2r ** (1.0 / (2 * rho)) if m2r > 0 else 0.0
    details["linf_true"] = float(np.max(np.abs(lp), initial=0.0))

    a, b = list(lp), list(mp)
    worst = 0.0
    step = 0
    while a:
        na = sum((v / scale) ** (2 * rho) for v in a) ** (1.0 / (2 * rho))
        nb = sum((v / scale) ** (2 * rho) for v in b) ** (1.0 / (2 * rho))
        norm_gap = abs(na - nb) / max(na, nb, 1e-300)
        ia = int(np.argmax(np.abs(a)))
        ib = int(np.argmax(np.abs(b)))
        top = max(abs(a[ia]), abs(b[ib]), 1e-300)
        max_gap = abs(abs(a[ia]) - abs(b[ib])) / top
        gap = max(norm_gap, max_gap if top > 1e-12 * scale else 0.0)
        worst = max(worst, gap)
        if gap > PEEL_RTOL:
            details.update(failed_step=f"peel_{step}", peel_gap=gap)
            return Report("peel_linf", False, gap, PEEL_RTOL, details)
        a.pop(ia)
        b.pop(ib)
        step += 1
    details["peel_max_gap"] = worst

    sa, sb = float(np.sum(lp)), float(np.sum(mp))
    sign_gap = abs(sa - sb) / max(1.0, float(np.sum(np.abs(lp))))
    signed_gap = float(np.max(np.abs(np.sort(lp) - np.sort(mp)), initial=0.0)) / scale
    details.update(linear_sum_a=sa, linear_sum_dual=sb, signed_gap=signed_gap)
    if sign_gap > PEEL_RTOL or signed_gap > PEEL_RTOL:
        details["failed_step"] = "sign_resolution"
        return Report("peel_linf", False, max(sign_gap, signed_gap), PEEL_RTOL, details)
    return Report("peel_linf", True, max(worst, sign_gap, signed_gap), PEEL_RTOL, details)


# ---------------------------------------------------------------------------
# Entropic axioms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EntropicReport:
    offset_measured: float
    offset_expected: float
    residual: float
    tol: float = ENTROPY_TOL

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        return {"offset_measured": self.offset_measured, "offset_expected": self.offset_expected,
                "residual": self.residual, "pass": self.passed}


@dataclass(frozen=True)
class EntropicAudit:
    """Per-state entropy offsets plus the zero-map and convexity checks."""

    offsets: List[EntropicReport]
    zero_map: Report
    convexity: Report
    state_map: Optional[Report] = None
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        parts = [*self.offsets, self.zero_map, self.convexity]
        if self.state_map is not None:
            parts.append(self.state_map)
        return all(bool(p) for p in parts)

    def __bool__(self) -> bool:
        return self.passed

    def __iter__(self):
        return iter(self.offsets)

    def __len__(self) -> int:
        return len(self.offsets)

    def __getitem__(self, i):
        return self.offsets[i]


def _shannon(weights) -> float:
    return float(-sum(w * math.log(w) for w in weights if w > 0))


def verify_entropic_axioms(phi_e: DualityMap, w: Optional[StateMap], states: Sequence,
                           seed: int = 0, tol: float = ENTROPY_TOL) -> EntropicAudit:
    """Entropy offsets ``S(Phi_e(rho)) - S(rho)`` against ``ln(p+q)``.

    The image is ``Phi_e(rho)`` itself, which is a state because ``f = 1/(p+q)``.
    If a state map ``w`` is supplied its own offset is checked too; it is the
    Shannon entropy of the weights, which equals ``ln(p+q)`` only when ``q = 0``
    and the weights are uniform.
    """
    alpha = phi_e.alpha
    c = getattr(phi_e.f, "constant_value", None)
    if c is None or abs(c - 1.0 / alpha) > 1e-12:
        raise WrongScaling(f"entropic maps need f = 1/{alpha}")
    expected = math.log(alpha)
    reports = []
    for rho in states:
        rho = DensityState(as_hermitian(rho).matrix)
        image = DensityState(apply_map(phi_e, rho).matrix)
        measured = von_neumann_entropy(image) - von_neumann_entropy(rho)
        reports.append(EntropicReport(measured, expected, abs(measured - expected), tol))

    zero = apply_map(phi_e, np.zeros((phi_e.n, phi_e.n)))
    zero_report = within("entropic_zero_map", float(np.max(np.abs(zero.matrix))), 0.0)

    rng = rng_for(seed)
    mats = [as_hermitian(s).matrix for s in states] or [random_state(phi_e.n, rng).matrix]
    probs = rng.dirichlet(np.ones(len(mats)))
    mix = sum(p * m for p, m in zip(probs, mats))
    lhs = apply_map(phi_e, mix).matrix
    rhs = sum(p * apply_map(phi_e, m).matrix for p, m in zip(probs, mats))
    conv = within("entropic_convexity", operator_norm(hermitian_part(lhs - rhs)), 1e-10)

    sm = None
    if w is not None and states:
        worst = 0.0
        for rho in states:
            img = apply_state_map(phi_e, w, rho)
            worst = max(worst, abs(von_neumann_entropy(img) - von_neumann_entropy(rho) - _shannon(w.weights)))
        sm = within("state_map_entropy_offset", worst, tol, expected=_shannon(w.weights))
    return EntropicAudit(reports, zero_report, conv, sm)


def derive_entropic_map(phi: DualityMap) -> DualityMap:
    """``A -> Phi(A) / ((p+q) f(A))``: same encoding, scaling fixed to ``1/(p+q)``."""
    return DualityMap(phi.n, phi.p, phi.q, phi.U, Constant(1.0 / phi.alpha))


def mixture_entropy_residual(components: Sequence[Tuple[float, object]]) -> float:
    """``sum p S(rho) - sum p ln p - S(sum p rho)``; zero iff the supports are orthogonal."""
    probs = _check_distribution([p for p, _ in components])
    states = [DensityState(as_hermitian(r).matrix) for _, r in components]
    dims = {s.dim for s in states}
    if len(dims) != 1:
        raise DimMismatch("all states must share a dimension")
    mix = sum(p * s.matrix for p, s in zip(probs, states))
    avg = sum(p * von_neumann_entropy(s) for p, s in zip(probs, states))
    return float(avg + _shannon(probs) - von_neumann_entropy(DensityState(mix)))


# ---------------------------------------------------------------------------
# Wigner extensions: block sums of unitary and antiunitary conjugations
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WignerExtension:
    """``rho -> (1/a) U (V_1 rho V_1^H + ... + M_1 conj(rho) M_1^H + ...) U^H``.

    Antiunitaries are stored as ``W = M K`` with ``K`` entrywise conjugation.
    """

    n: int
    V: Tuple[np.ndarray, ...]
    M: Tuple[np.ndarray, ...]
    U: np.ndarray

    @property
    def alpha(self) -> int:
        return len(self.V) + len(self.M)

    @property
    def m(self) -> int:
        return self.alpha * self.n

    def __call__(self, rho) -> np.ndarray:
        r = as_hermitian(rho).matrix
        blocks = [v @ r @ v.conj().T for v in self.V] + [u @ r.conj() @ u.conj().T for u in self.M]
        out = self.U @ block_diag(*blocks) @ self.U.conj().T / self.alpha
        return 0.5 * (out + out.conj().T)

    def kraus(self) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        """Operators ``K`` with ``Phi(rho) = sum K rho K^H + sum L conj(rho) L^H``."""
        n, a = self.n, self.alpha
        emb = [np.zeros((self.m, n), dtype=complex) for _ in range(a)]
        for i, e in enumerate(emb):
            e[i * n:(i + 1) * n, :] = np.eye(n)
        s = 1.0 / math.sqrt(a)
        lin = [s * self.U @ emb[i] @ v for i, v in enumerate(self.V)]
        anti = [s * self.U @ emb[len(self.V) + j] @ u for j, u in enumerate(self.M)]
        return lin, anti

    def superoperator(self) -> Tuple[np.ndarray, np.ndarray]:
        """Pair ``(S, T)`` with ``vec Phi(rho) = S vec(rho) + T vec(conj(rho))``, row-major vec."""
        lin, anti = self.kraus()
        S = sum((np.kron(k, k.conj()) for k in lin), np.zeros((self.m ** 2, self.n ** 2), complex))
        T = sum((np.kron(k, k.conj()) for k in anti), np.zeros((self.m ** 2, self.n ** 2), complex))
        return S, T


def sample_wigner_extension(n: int, p: int, q: int, seed, trials: int = 5,
                            haar: bool = True) -> Tuple[WignerExtension, Report]:
    """Random Wigner extension and a report on its entropy offset, convexity and spectrum.

    With ``haar=False`` every unitary is the identity, giving plain copies of
    ``rho`` and ``conj(rho)``.
    """
    if p < 0 or q < 0 or p + q < 1:
        raise InvariantError("need p, q >= 0 and p + q >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)
    a = p + q
    if haar:
        V = tuple(random_unitary(n, rng) for _ in range(p))
        M = tuple(random_unitary(n, rng) for _ in range(q))
        U = random_unitary(a * n, rng)
    else:
        V = tuple(np.eye(n, dtype=complex) for _ in range(p))
        M = tuple(np.eye(n, dtype=complex) for _ in range(q))
        U = np.eye(a * n, dtype=complex)
    ext = WignerExtension(n, V, M, U)

    expected = math.log(a)
    offset_err = conv_err = spec_err = 0.0
    for _ in range(trials):
        r1, r2 = random_state(n, rng).matrix, random_state(n, rng).matrix
        out = ext(r1)
        offset_err = max(offset_err, abs(von_neumann_entropy(out) - von_neumann_entropy(r1) - expected))
        want = np.sort(np.repeat(eigvalsh(r1) / a, a))
        spec_err = max(spec_err, float(np.max(np.abs(eigvalsh(out) - want))))
        t = float(rng.random())
        conv_err = max(conv_err, float(np.max(np.abs(ext(t * r1 + (1 - t) * r2) - t * out - (1 - t) * ext(r2)))))
    passed = offset_err <= ENTROPY_TOL and conv_err <= 1e-10 and spec_err <= ENTROPY_TOL
    report = Report("wigner_extension", passed, offset_err, ENTROPY_TOL,
                    {"alpha": a, "offset_expected": expected, "convexity_error": conv_err,
                     "spectrum_error": spec_err})
    return ext, report

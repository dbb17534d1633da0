"""Canonical duality maps ``A -> f(A) U (A^{+p} + conj(A)^{+q}) U^H`` and their checks."""
from __future__ import annotations

import math
from dataclasses import InitVar, dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from .errors import (
    DimMismatch,
    InvalidArity,
    InvariantError,
    NoUnitaryBlocks,
    InvalidDistribution,
    ScalingUndefined,
    ZeroOperandInMixture,
)
from .opscore import (
    DensityState,
    HermitianOperator,
    Projector,
    as_hermitian,
    block_diag,
    block_embed,
    eigvalsh,
    evolution,
    hermitian_part,
    operator_norm,
    random_unitary,
    rng_for,
    spectral_norm,
    trace_norm,
)
from .reports import Report, within
from .serialize import matrix_from_json, matrix_to_json

UNITARY_ATOL = 1e-10
FINGERPRINT_GRID = 1e-9


# ---------------------------------------------------------------------------
# Scaling functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    """``f(A) = c`` on every nonzero ``A``."""

    c: float

    def __post_init__(self):
        if not math.isfinite(self.c) or self.c == 0:
            raise InvariantError("constant scaling must be a finite nonzero real")

    lipschitz = 0.0

    @property
    def constant_value(self) -> float:
        return float(self.c)

    def __call__(self, A: HermitianOperator) -> float:
        return 0.0 if A.is_zero() else float(self.c)

    def to_json(self) -> dict:
        return {"kind": "constant", "c": float(self.c)}


@dataclass(frozen=True)
class KramersWannier:
    """Strong-weak Ising scaling ``-ln tanh(J beta) / (2 J beta)``.

    ``J`` comes from the constructor, so on nonzero inputs the value does not
    depend on the operator; use :func:`dualis.ising.coupling_from_norm` to
    read ``J`` off a full Ising Hamiltonian first.
    """

    J: float
    beta: float

    def __post_init__(self):
        if not (self.J > 0 and self.beta > 0):
            raise InvariantError("Kramers-Wannier scaling needs J > 0 and beta > 0")

    lipschitz = 0.0

    @property
    def constant_value(self) -> float:
        K = self.J * self.beta
        # -1/2 ln tanh K == atanh(exp(-2K)), the latter without cancellation
        return math.atanh(math.exp(-2.0 * K)) / K

    def __call__(self, A: HermitianOperator) -> float:
        return 0.0 if A.is_zero() else self.constant_value

    def to_json(self) -> dict:
        return {"kind": "kw", "J": float(self.J), "beta": float(self.beta)}


def fingerprint(A) -> Tuple[int, ...]:
    """Sorted spectrum on a 1e-9 grid; invariant under unitary conjugation."""
    return tuple(int(round(x / FINGERPRINT_GRID)) for x in eigvalsh(A))


@dataclass(frozen=True)
class Table:
    """Scaling values looked up by spectral fingerprint, with a declared Lipschitz bound."""

    entries: Tuple[Tuple[Tuple[int, ...], float], ...]
    lipschitz: float

    def __post_init__(self):
        for key, value in self.entries:
            if not math.isfinite(value) or value == 0:
                raise InvariantError("table scaling values must be finite and nonzero")
            if not any(key):
                raise InvariantError("the zero operator cannot carry a table entry")
        if not self.lipschitz >= 0:
            raise InvariantError("Lipschitz bound must be non-negative")

    @classmethod
    def from_operators(cls, pairs, lipschitz: float) -> "Table":
        return cls(tuple((fingerprint(A), float(v)) for A, v in pairs), float(lipschitz))

    def __call__(self, A: HermitianOperator) -> float:
        if A.is_zero():
            return 0.0
        key = fingerprint(A)
        for k, v in self.entries:
            if k == key:
                return v
        raise ScalingUndefined("operator spectrum not present in the scaling table")

    def to_json(self) -> dict:
        return {
            "kind": "table",
            "L": float(self.lipschitz),
            "entries": [
                {"spectrum": [k * FINGERPRINT_GRID for k in key], "value": v}
                for key, v in self.entries
            ],
        }


@dataclass(frozen=True, eq=False)
class Composed:
    """``f(A) = outer(inner(A)) * first(A)`` for a composition ``Phi2 o Phi1``."""

    outer: "ScalingFunction"
    inner: "DualityMap"

    lipschitz = None

    def __call__(self, A: HermitianOperator) -> float:
        return self.outer(self.inner(A)) * self.inner.f(A)

    def to_json(self) -> dict:
        return {"kind": "composed", "outer": self.outer.to_json(), "inner": self.inner.to_json()}


ScalingFunction = Union[Constant, KramersWannier, Table, Composed]


def scaling_from_json(d: dict) -> ScalingFunction:
    kind = d.get("kind")
    if kind == "constant":
        return Constant(float(d["c"]))
    if kind == "kw":
        return KramersWannier(float(d["J"]), float(d["beta"]))
    if kind == "table":
        entries = tuple(
            (tuple(int(round(x / FINGERPRINT_GRID)) for x in e["spectrum"]), float(e["value"]))
            for e in d["entries"]
        )
        return Table(entries, float(d["L"]))
    if kind == "composed":
        return Composed(scaling_from_json(d["outer"]), DualityMap.from_json(d["inner"]))
    raise InvariantError(f"unknown scaling kind {kind!r}")


# ---------------------------------------------------------------------------
# Maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DualityMap:
    """``Phi(A) = f(A) U (A^{+p} + conj(A)^{+q}) U^H`` from dimension ``n`` to ``(p+q) n``.

    Pass ``check=False`` to skip the unitarity test on ``U``; only fault
    injection needs that.
    """

    n: int
    p: int
    q: int
    U: np.ndarray
    f: ScalingFunction
    check: InitVar[bool] = True

    def __post_init__(self, check: bool):
        if self.p < 0 or self.q < 0 or self.p + self.q < 1:
            raise InvalidArity(f"need p, q >= 0 and p + q >= 1, got p={self.p}, q={self.q}")
        if self.n < 1:
            raise InvariantError("n must be positive")
        U = np.array(self.U, dtype=complex)
        if U.shape != (self.m, self.m):
            raise DimMismatch(f"U has shape {U.shape}, expected {(self.m, self.m)}")
        if check:
            dev = float(np.max(np.abs(U.conj().T @ U - np.eye(self.m))))
            if dev > UNITARY_ATOL:
                raise InvariantError(f"U is not unitary (deviation {dev:.3e})")
        U.setflags(write=False)
        object.__setattr__(self, "U", U)

    @property
    def m(self) -> int:
        return (self.p + self.q) * self.n

    @property
    def alpha(self) -> int:
        return self.p + self.q

    @classmethod
    def canonical(cls, n: int, p: int = 1, q: int = 0, f: ScalingFunction | None = None,
                  U=None) -> "DualityMap":
        m = (p + q) * n
        return cls(n, p, q, np.eye(m) if U is None else U, f if f is not None else Constant(1.0))

    def encode(self, A) -> np.ndarray:
        """The encoding part ``U (A^{+p} + conj(A)^{+q}) U^H`` as a raw matrix."""
        A = as_hermitian(A)
        if A.dim != self.n:
            raise DimMismatch(f"operator has dim {A.dim}, map expects {self.n}")
        B = block_embed(A, self.p, self.q).matrix
        return self.U @ B @ self.U.conj().T

    def __call__(self, A) -> HermitianOperator:
        return apply_map(self, A)

    def to_json(self) -> dict:
        return {"n": self.n, "p": self.p, "q": self.q, "U": matrix_to_json(self.U),
                "f": self.f.to_json()}

    @classmethod
    def from_json(cls, d: dict) -> "DualityMap":
        try:
            return cls(int(d["n"]), int(d["p"]), int(d["q"]), matrix_from_json(d["U"]),
                       scaling_from_json(d["f"]))
        except (KeyError, TypeError) as exc:
            raise InvariantError(f"malformed duality map JSON: {exc}") from exc


def apply_map(phi: DualityMap, A) -> HermitianOperator:
    A = as_hermitian(A)
    if A.dim != phi.n:
        raise DimMismatch(f"operator has dim {A.dim}, map expects {phi.n}")
    try:
        fv = phi.f(A)
    except ScalingUndefined:
        raise
    except Exception as exc:  # noqa: BLE001 - any failure inside f is a scaling failure
        raise ScalingUndefined(f"scaling function failed: {exc}") from exc
    if not math.isfinite(fv):
        raise ScalingUndefined("scaling function returned a non-finite value")
    return hermitian_part(fv * phi.encode(A))


def random_duality_map(n: int, p: int, q: int, seed, f: ScalingFunction | None = None) -> DualityMap:
    """Haar-random ``U``; unless given, ``f`` is a random constant of random sign in [0.25, 4]."""
    rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)
    U = random_unitary((p + q) * n, rng)
    if f is None:
        c = float(np.exp(rng.uniform(np.log(0.25), np.log(4.0))))
        f = Constant(c if rng.random() < 0.75 else -c)
    return DualityMap(n, p, q, U, f)


def expected_spectrum(phi: DualityMap, A) -> np.ndarray:
    """``f(A) * spec(A)``, each value repeated ``p + q`` times, sorted."""
    A = as_hermitian(A)
    return np.sort(phi.f(A) * np.repeat(eigvalsh(A), phi.alpha))


def verify_spectral_axiom(phi: DualityMap, A, tol: float = 1e-9) -> Report:
    """Multiset comparison of ``spec(Phi(A))`` with ``f(A) spec(A)`` (``p+q``-fold).

    The deviation is the largest gap between the two sorted lists, held to
    ``tol * max(1, max |expected|)``.
    """
    A = as_hermitian(A)
    got = eigvalsh(apply_map(phi, A))
    want = expected_spectrum(phi, A)
    dev = float(np.max(np.abs(got - want)))
    scale = max(1.0, float(np.max(np.abs(want))))
    return within("spectral_axiom", dev, tol * scale, f=phi.f(A), max_deviation=dev)


def _check_distribution(weights: Sequence[float], atol: float = 1e-12) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0 or np.any(w < 0) or np.any(w > 1) or abs(w.sum() - 1.0) > atol:
        raise InvalidDistribution("weights must lie in [0, 1] and sum to 1")
    return w


def verify_convexity_identity(phi: DualityMap, inputs, tol: float = 1e-8) -> Report:
    """Check ``Phi(sum p_i a_i) == f(sum p_i a_i) sum (p_i / f(a_i)) Phi(a_i)``."""
    probs = _check_distribution([p for p, _ in inputs])
    ops = [as_hermitian(a) for _, a in inputs]
    for a in ops:
        if a.is_zero():
            raise ZeroOperandInMixture("mixture contains the zero operator, f(0) is not invertible")
    mix = hermitian_part(sum(p * a.matrix for p, a in zip(probs, ops)))
    lhs = apply_map(phi, mix)
    rhs = phi.f(mix) * sum(p / phi.f(a) * apply_map(phi, a).matrix for p, a in zip(probs, ops))
    dev = operator_norm(hermitian_part(lhs.matrix - rhs))
    bound = tol * max(1.0, operator_norm(lhs))
    return within("convexity_identity", dev, bound, terms=len(ops))


def _projector_image(phi: DualityMap, P: np.ndarray, c: float) -> np.ndarray:
    cP = HermitianOperator(c * P)
    return apply_map(phi, cP).matrix / (c * phi.f(cP))


def _idempotency_error(X: np.ndarray) -> float:
    return float(np.max(np.abs(X @ X - X)))


def verify_projector_lemmas(phi: DualityMap, seed, tol: float = 1e-9) -> Report:
    """Images of orthogonal projectors, divided by ``c f(cP)``, are orthogonal projectors.

    Checks, for a random complement pair ``(Q, I - Q)`` and a random orthogonal
    pair ``P1 _|_ P2``, each at a random scale ``c`` and at ``c = -3``:
    idempotency, mutual orthogonality, complementarity (images of ``Q`` and
    ``I - Q`` sum to the image of ``I``), additivity on ``P1 + P2`` and the rank.
    Also checks that a random projector whose lower-right block vanishes has
    vanishing off-diagonal blocks, and that images are block diagonal in the
    ``U`` frame.
    """
    rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)
    n, m, a = phi.n, phi.m, phi.alpha
    errors = {}
    c_rand = float(rng.uniform(0.5, 3.0) * rng.choice([-1.0, 1.0]))
    W = random_unitary(n, rng)
    k = int(rng.integers(1, n)) if n > 1 else 1
    Q1 = W[:, :k] @ W[:, :k].conj().T
    Q2 = np.eye(n) - Q1
    for c in (c_rand, -3.0):
        pi1 = _projector_image(phi, Q1, c)
        errors[f"complement_idempotent_c={c:.3g}"] = _idempotency_error(pi1)
        errors[f"complement_rank_c={c:.3g}"] = abs(np.trace(pi1).real - a * k)
        pi_id = _projector_image(phi, np.eye(n), c)
        if n > 1:
            pi2 = _projector_image(phi, Q2, c)
            errors[f"complement_idempotent2_c={c:.3g}"] = _idempotency_error(pi2)
            errors[f"complement_orthogonal_c={c:.3g}"] = float(np.max(np.abs(pi1 @ pi2)))
            errors[f"complement_sum_c={c:.3g}"] = float(np.max(np.abs(pi1 + pi2 - pi_id)))
        errors[f"identity_image_c={c:.3g}"] = float(np.max(np.abs(pi_id - np.eye(m))))

        if n > 1:
            k1 = int(rng.integers(1, n))
            k2 = int(rng.integers(1, n - k1 + 1))
            V = random_unitary(n, rng)
            P1 = V[:, :k1] @ V[:, :k1].conj().T
            P2 = V[:, k1:k1 + k2] @ V[:, k1:k1 + k2].conj().T
            im1, im2 = _projector_image(phi, P1, c), _projector_image(phi, P2, c)
            im12 = _projector_image(phi, P1 + P2, c)
            errors[f"orthogonal_idempotent_c={c:.3g}"] = max(_idempotency_error(im1),
                                                             _idempotency_error(im2))
            errors[f"orthogonal_product_c={c:.3g}"] = float(np.max(np.abs(im1 @ im2)))
            errors[f"orthogonal_additive_c={c:.3g}"] = float(np.max(np.abs(im12 - im1 - im2)))
            # in the U frame the image is block diagonal: off-diagonal blocks vanish
            framed = phi.U.conj().T @ im12 @ phi.U
            mask = np.kron(1.0 - np.eye(a), np.ones((n, n)))
            errors[f"frame_offdiagonal_c={c:.3g}"] = float(np.max(np.abs(framed * mask)))

    # For a projector split into blocks, P22 - P22^2 = P12^H P12, so a vanishing
    # lower-right block forces vanishing off-diagonal blocks and in general
    # ||P12||^2 <= ||P22||.
    if m > 1:
        top = int(rng.integers(1, m))
        basis = np.zeros((m, m), dtype=complex)
        basis[:top, :top] = random_unitary(top, rng)
        r = int(rng.integers(1, top + 1))
        Pi = Projector(basis[:, :r] @ basis[:, :r].conj().T).matrix
        errors["offdiag_zero_lower_right"] = float(np.max(np.abs(Pi[:top, top:])))
        G = random_unitary(m, rng)[:, :r]
        Pi = Projector(G @ G.conj().T).matrix
        errors["offdiag_block_inequality"] = max(
            0.0, spectral_norm(Pi[:top, top:]) ** 2 - spectral_norm(Pi[top:, top:]))

    worst = max(errors.values())
    return within("projector_lemmas", worst, tol, **errors)


# ---------------------------------------------------------------------------
# State maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateMap:
    """Block weights ``alpha_1..alpha_p`` of a compatible state map."""

    weights: Tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        _check_distribution(w)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, p: int) -> "StateMap":
        return cls(tuple([1.0 / p] * p))

    def entropy(self) -> float:
        """Shannon entropy ``-sum a ln a`` of the weights (nats)."""
        return float(-sum(x * math.log(x) for x in self.weights if x > 0))

    def to_json(self) -> dict:
        return {"alpha": list(self.weights)}

    @classmethod
    def from_json(cls, d: dict) -> "StateMap":
        return cls(tuple(d["alpha"]))


def apply_state_map(phi: DualityMap, w: StateMap, rho) -> DensityState:
    """``U (alpha_1 rho + ... + alpha_p rho + 0 + ... + 0) U^H``; conjugate slots carry zero."""
    if phi.p == 0:
        raise NoUnitaryBlocks("a map with p = 0 has no compatible state map")
    if len(w.weights) != phi.p:
        raise DimMismatch(f"{len(w.weights)} weights for p = {phi.p}")
    r = as_hermitian(rho).matrix
    if r.shape[0] != phi.n:
        raise DimMismatch(f"state has dim {r.shape[0]}, map expects {phi.n}")
    zero = np.zeros_like(r)
    B = block_diag(*([x * r for x in w.weights] + [zero] * phi.q))
    out = phi.U @ B @ phi.U.conj().T
    return DensityState(0.5 * (out + out.conj().T))


def verify_born_rule(phi: DualityMap, w: StateMap, A, rho, tol: float = 1e-10) -> Report:
    """``Tr[Phi(A) Phi_state(rho)] == f(A) Tr[A rho]``, relative to ``max(1, |rhs|)``."""
    A = as_hermitian(A)
    lhs = float(np.trace(apply_map(phi, A).matrix @ apply_state_map(phi, w, rho).matrix).real)
    rhs = float(phi.f(A) * np.trace(A.matrix @ as_hermitian(rho).matrix).real)
    dev = abs(lhs - rhs)
    return within("born_rule", dev, tol * max(1.0, abs(rhs)), lhs_value=lhs, rhs_value=rhs)


def verify_time_dynamics(phi: DualityMap, w: StateMap, H, rho, t: float,
                         tol: float = 1e-9) -> Report:
    """Evolve-then-map against map-then-evolve at rescaled time ``t / f(H)`` (trace norm)."""
    H = as_hermitian(H)
    fH = phi.f(H)
    if fH == 0:
        raise ScalingUndefined("f(H) = 0, rescaled time is undefined")
    r = as_hermitian(rho).matrix
    Ut = evolution(H, t)
    left = apply_state_map(phi, w, Ut @ r @ Ut.conj().T).matrix
    Vt = evolution(apply_map(phi, H), t / fH)
    right = Vt @ apply_state_map(phi, w, r).matrix @ Vt.conj().T
    dev = trace_norm(hermitian_part(left - right))
    return within("time_dynamics", dev, tol, t=float(t), f=float(fH))


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------

def compose_exact(phi2: DualityMap, phi1: DualityMap) -> DualityMap:
    """Canonical form of ``phi2 o phi1``.

    Arities become ``p = p1 p2 + q1 q2`` and ``q = q1 p2 + p1 q2``; the scaling
    is ``f2(phi1(A)) f1(A)``, collapsed to a constant when both factors are.
    """
    if phi2.n != phi1.m:
        raise DimMismatch(f"outer map expects dim {phi2.n}, inner map produces {phi1.m}")
    n, k1, k2 = phi1.n, phi1.alpha, phi2.alpha
    W = phi2.U @ block_diag(*([phi1.U] * phi2.p + [phi1.U.conj()] * phi2.q))
    plain = [(i2 < phi2.p) == (i1 < phi1.p) for i2 in range(k2) for i1 in range(k1)]
    order = [b for b, ok in enumerate(plain) if ok] + [b for b, ok in enumerate(plain) if not ok]
    perm = np.zeros((k1 * k2, k1 * k2))
    perm[np.arange(k1 * k2), order] = 1.0
    U = W @ np.kron(perm, np.eye(n)).T
    p = sum(plain)
    c1 = getattr(phi1.f, "constant_value", None)
    c2 = getattr(phi2.f, "constant_value", None)
    f = Constant(c1 * c2) if c1 is not None and c2 is not None else Composed(phi2.f, phi1)
    return DualityMap(n, p, k1 * k2 - p, U, f)

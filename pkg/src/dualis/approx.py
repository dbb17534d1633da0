"""Approximate dualities: defects, similarity bounds, composition and the physical-property bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from .duality import DualityMap, StateMap, apply_map, apply_state_map, compose_exact
from .errors import (
    DimMismatch,
    InvariantError,
    NegativeScaling,
    Overflow,
    RankMismatch,
    UnencodedState,
)
from .opscore import (
    HermitianOperator,
    Projector,
    as_hermitian,
    eig_hermitian,
    eigvalsh,
    evolution,
    hermitian_part,
    operator_norm,
    random_hermitian,
    spectral_norm,
    trace_exp,
    trace_norm,
)
from .reports import Report, bound_report
from .serialize import matrix_from_json, matrix_to_json

ENCODED_ATOL = 1e-9


# ---------------------------------------------------------------------------
# Error weights k(A)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantK:
    c: float

    def __post_init__(self):
        if not self.c >= 0:
            raise InvariantError("error weight must be non-negative")

    def __call__(self, A) -> float:
        return float(self.c)

    def to_json(self) -> dict:
        return {"kind": "constant", "c": float(self.c)}


@dataclass(frozen=True)
class NormScaled:
    """``k(A) = c max(1, ||A||)``."""

    c: float

    def __post_init__(self):
        if not self.c >= 0:
            raise InvariantError("error weight must be non-negative")

    def __call__(self, A) -> float:
        return float(self.c) * max(1.0, operator_norm(A))

    def to_json(self) -> dict:
        return {"kind": "norm_scaled", "c": float(self.c)}


@dataclass(frozen=True, eq=False)
class ComposedK:
    """Error weight of ``outer o inner``, assembled per input from both weights."""

    outer: "ApproxDuality"
    inner: "ApproxDuality"

    def terms(self, A) -> dict:
        A = as_hermitian(A)
        o, i = self.outer, self.inner
        k1 = i.k(A)
        inner_restricted = i.restricted(A)
        return {
            "outer_weight": o.k(inner_restricted),
            "lipschitz_square": o.L * k1 ** 2 * i.epsilon,
            "lipschitz_linear": o.L * abs(i.exact.f(A)) * operator_norm(A) * k1,
            "outer_scale": abs(o.exact.f(apply_map(i.exact, A))) * k1,
        }

    def __call__(self, A) -> float:
        return float(sum(self.terms(A).values()))

    def to_json(self) -> dict:
        return {"kind": "composed", "outer": self.outer.to_json(), "inner": self.inner.to_json()}


ErrorWeight = Union[ConstantK, NormScaled, ComposedK]


def k_from_json(d: dict) -> ErrorWeight:
    kind = d.get("kind")
    if kind == "constant":
        return ConstantK(float(d["c"]))
    if kind == "norm_scaled":
        return NormScaled(float(d["c"]))
    if kind == "composed":
        return ComposedK(ApproxDuality.from_json(d["outer"]), ApproxDuality.from_json(d["inner"]))
    raise InvariantError(f"unknown error-weight kind {kind!r}")


# ---------------------------------------------------------------------------
# Perturbations
# ---------------------------------------------------------------------------

def unit_perturbation(m: int, seed) -> np.ndarray:
    """Seeded random Hermitian ``E`` with operator norm exactly 1."""
    E = random_hermitian(m, seed).matrix
    return E / operator_norm(E)


@dataclass(frozen=True, eq=False)
class AdditivePerturbation:
    """``A -> Phi(A) + scale k(A) E`` with ``||E|| <= 1``.

    ``E`` is drawn from ``seed`` unless given explicitly.
    """

    scale: float
    seed: Optional[int] = None
    E: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.scale >= 0:
            raise InvariantError("perturbation scale must be non-negative")
        if (self.seed is None) == (self.E is None):
            raise InvariantError("give exactly one of seed or E")
        if self.E is not None:
            E = as_hermitian(self.E).matrix
            if operator_norm(E) > 1 + 1e-12:
                raise InvariantError("perturbation direction must have norm at most 1")
            object.__setattr__(self, "E", E)

    def direction(self, m: int) -> np.ndarray:
        if self.E is not None:
            if self.E.shape[0] != m:
                raise DimMismatch(f"E has dim {self.E.shape[0]}, map target has dim {m}")
            return self.E
        return unit_perturbation(m, self.seed)

    def apply(self, owner: "ApproxDuality", A: HermitianOperator) -> np.ndarray:
        base = apply_map(owner.exact, A).matrix
        if self.scale == 0:
            return base
        return base + self.scale * owner.k(A) * self.direction(owner.exact.m)

    def to_json(self) -> dict:
        if self.E is not None:
            return {"kind": "additive", "scale": float(self.scale), "E": matrix_to_json(self.E)}
        return {"kind": "additive", "scale": float(self.scale), "seed": int(self.seed)}


@dataclass(frozen=True, eq=False)
class ComposedPerturbation:
    """``A -> outer~(S1 inner~(A) S1)``."""

    outer: "ApproxDuality"
    inner: "ApproxDuality"

    def apply(self, owner: "ApproxDuality", A: HermitianOperator) -> np.ndarray:
        return self.outer.perturbed(self.inner.restricted(A)).matrix

    def to_json(self) -> dict:
        return {"kind": "composed", "outer": self.outer.to_json(), "inner": self.inner.to_json()}


Perturbation = Union[AdditivePerturbation, ComposedPerturbation]


def perturbation_from_json(d: dict) -> Perturbation:
    kind = d.get("kind", "additive")
    if kind == "additive":
        if "E" in d:
            return AdditivePerturbation(float(d["scale"]), E=matrix_from_json(d["E"]))
        return AdditivePerturbation(float(d["scale"]), seed=int(d["seed"]))
    if kind == "composed":
        return ComposedPerturbation(ApproxDuality.from_json(d["outer"]), ApproxDuality.from_json(d["inner"]))
    raise InvariantError(f"unknown perturbation kind {kind!r}")


# ---------------------------------------------------------------------------
# Approximate dualities
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ApproxDuality:
    """An exact map plus a perturbation, a restriction projector and error data.

    ``L`` is the Lipschitz constant of ``exact.f`` on the working set; it
    defaults to the one the scaling function declares.
    """

    exact: DualityMap
    perturbation: Perturbation
    S: np.ndarray
    epsilon: float
    k: ErrorWeight
    eta: float = 0.0
    L: Optional[float] = None

    def __post_init__(self):
        S = Projector(self.S).matrix
        if S.shape[0] != self.exact.m:
            raise DimMismatch(f"S has dim {S.shape[0]}, map target has dim {self.exact.m}")
        if not (self.epsilon >= 0 and self.eta >= 0):
            raise InvariantError("epsilon and eta must be non-negative")
        object.__setattr__(self, "S", S)
        L = self.L if self.L is not None else getattr(self.exact.f, "lipschitz", None)
        if L is None:
            raise InvariantError("no Lipschitz constant declared for the scaling function")
        object.__setattr__(self, "L", float(L))

    @classmethod
    def additive(cls, exact: DualityMap, scale: float, seed: Optional[int] = None,
                 k: ErrorWeight | None = None, S=None, eta: float = 0.0, E=None,
                 L: Optional[float] = None) -> "ApproxDuality":
        """``Phi(A) + scale k(A) E``; its true epsilon is ``scale``."""
        S = np.eye(exact.m) if S is None else S
        return cls(exact, AdditivePerturbation(scale, seed, E), S, float(scale),
                   k if k is not None else ConstantK(1.0), eta, L)

    @property
    def n(self) -> int:
        return self.exact.n

    @property
    def m(self) -> int:
        return self.exact.m

    def perturbed(self, A) -> HermitianOperator:
        A = as_hermitian(A)
        if A.dim != self.n:
            raise DimMismatch(f"operator has dim {A.dim}, map expects {self.n}")
        return hermitian_part(self.perturbation.apply(self, A))

    def restricted(self, A) -> HermitianOperator:
        """The perturbed image compressed to ``S``."""
        return hermitian_part(self.S @ self.perturbed(A).matrix @ self.S)

    def __call__(self, A) -> HermitianOperator:
        return self.perturbed(A)

    def to_json(self) -> dict:
        return {
            "exact": self.exact.to_json(),
            "epsilon": float(self.epsilon),
            "eta": float(self.eta),
            "L": float(self.L),
            "k": self.k.to_json(),
            "S": matrix_to_json(self.S),
            "perturb": self.perturbation.to_json(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "ApproxDuality":
        try:
            return cls(DualityMap.from_json(d["exact"]), perturbation_from_json(d["perturb"]),
                       matrix_from_json(d["S"]), float(d["epsilon"]), k_from_json(d["k"]),
                       float(d.get("eta", 0.0)), d.get("L"))
        except (KeyError, TypeError) as exc:
            raise InvariantError(f"malformed approximate duality JSON: {exc}") from exc


def defect(phi: ApproxDuality, A) -> float:
    """``|| S Phi~(A) S - Phi(A) ||`` in operator norm."""
    A = as_hermitian(A)
    return operator_norm(hermitian_part(phi.restricted(A).matrix - apply_map(phi.exact, A).matrix))


def audit_defect(phi: ApproxDuality, A) -> Report:
    """The defining inequality ``defect(A) <= k(A) epsilon``."""
    return bound_report("defect", defect(phi, A), phi.k(A) * phi.epsilon)


# ---------------------------------------------------------------------------
# Similar exact maps
# ---------------------------------------------------------------------------

def _same_shape(a: DualityMap, b: DualityMap) -> None:
    if (a.n, a.p, a.q) != (b.n, b.p, b.q):
        raise DimMismatch("maps must share n, p and q")


def similar_map_bound(phi: DualityMap, phi2: DualityMap, M) -> Report:
    """``||Phi(M) - Phi'(M)|| <= (sqrt f + sqrt f') ||sqrt f U - sqrt f' U'|| ||M||``."""
    _same_shape(phi, phi2)
    M = as_hermitian(M)
    f1, f2 = phi.f(M), phi2.f(M)
    if f1 <= 0 or f2 <= 0:
        raise NegativeScaling("the similarity bound needs positive scalings")
    lhs = operator_norm(hermitian_part(apply_map(phi, M).matrix - apply_map(phi2, M).matrix))
    r1, r2 = math.sqrt(f1), math.sqrt(f2)
    rhs = (r1 + r2) * spectral_norm(r1 * phi.U - r2 * phi2.U) * operator_norm(M)
    return bound_report("similar_maps", lhs, rhs, f=f1, f_other=f2)


def same_map_two_inputs_bound(phi: DualityMap, M, M2, tol: float = 1e-9) -> Report:
    """``||Phi(M) - Phi(M')|| == ||f(M) M - f(M') M'||``, checked as an equality."""
    M, M2 = as_hermitian(M), as_hermitian(M2)
    lhs = operator_norm(hermitian_part(apply_map(phi, M).matrix - apply_map(phi, M2).matrix))
    rhs = operator_norm(hermitian_part(phi.f(M) * M.matrix - phi.f(M2) * M2.matrix))
    gap = abs(lhs - rhs)
    passed = gap <= tol * max(1.0, rhs)
    return Report("same_map_two_inputs", passed, lhs, rhs, {"gap": gap})


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------

def compose_approx(phi2: ApproxDuality, phi1: ApproxDuality) -> ApproxDuality:
    """``phi2 o phi1`` with ``epsilon`` and ``eta`` added and the composite error weight.

    The composite perturbation is ``A -> phi2~(S1 phi1~(A) S1)`` and its
    restriction is ``S2``.  Its Lipschitz constant is 0 when the composed
    scaling is constant; otherwise it must be supplied before further
    composition, so it is left at ``nan``.
    """
    if phi2.n != phi1.m:
        raise DimMismatch(f"outer map expects dim {phi2.n}, inner map produces {phi1.m}")
    exact = compose_exact(phi2.exact, phi1.exact)
    L = 0.0 if hasattr(exact.f, "constant_value") else math.nan
    return ApproxDuality(exact, ComposedPerturbation(phi2, phi1), phi2.S,
                         phi1.epsilon + phi2.epsilon, ComposedK(phi2, phi1),
                         phi1.eta + phi2.eta, L)


# ---------------------------------------------------------------------------
# Physical-property bounds
# ---------------------------------------------------------------------------

def eigenvalue_bound(phi: ApproxDuality, A) -> List[Report]:
    """Weyl-type bound on each eigenvalue of the restricted perturbed image.

    The ``j``-th eigenvalue is paired with the source eigenvalue whose scaled
    value sits at position ``j`` after sorting, which is the ``i``-th smallest
    for ``f(A) >= 0`` and the ``i``-th largest otherwise.
    """
    A = as_hermitian(A)
    rank = int(round(np.trace(phi.S).real))
    if rank != phi.m:
        raise RankMismatch(f"S has rank {rank}, the encoded space has dimension {phi.m}")
    alpha = phi.exact.alpha
    lam = eigvalsh(A)
    fA = phi.exact.f(A)
    order = np.argsort(fA * lam, kind="stable")
    got = eigvalsh(phi.restricted(A))
    bound = phi.k(A) * phi.epsilon
    reports = []
    for j in range(phi.m):
        i = int(order[j // alpha])
        target = fA * lam[i]
        reports.append(bound_report(f"eigenvalue_{j}", abs(got[j] - target), bound,
                                    i=i, j=j, source=float(lam[i])))
    return reports


def low_energy_projector(X, delta: float) -> np.ndarray:
    """Projector onto the eigenvectors of ``X`` with eigenvalue below ``delta``."""
    w, v = eig_hermitian(X)
    keep = v[:, w < delta]
    return keep @ keep.conj().T


def partition_bound(phi: ApproxDuality, H, beta: float, delta: float) -> Report:
    """Relative error of the perturbed partition function against ``(p+q) Z_H(f beta)``.

    ``lhs`` uses full traces.  The bound is the truncation term for the
    subspace below ``delta`` plus ``e^{beta k(H) eps} - 1``.
    """
    H = as_hermitian(H)
    alpha = phi.exact.alpha
    fH = phi.exact.f(H)
    pert = phi.perturbed(H)
    z_dual = trace_exp(eigvalsh(pert), -beta)
    z_ref = alpha * trace_exp(eigvalsh(H), -beta * fH)
    lhs = abs(z_dual - z_ref) / z_ref
    expo = beta * fH * operator_norm(H) - beta * delta
    if expo > 700:
        raise Overflow("truncation term overflows")
    truncation = phi.m * math.exp(expo) / (alpha * phi.n)
    kH = phi.k(H)
    thermal = math.expm1(beta * kH * phi.epsilon)
    low = low_energy_projector(pert, delta)
    return bound_report("partition", lhs, truncation + thermal, truncation_term=truncation,
                        thermal_term=thermal, low_energy_rank=int(round(np.trace(low).real)))


def dynamics_bound(phi: ApproxDuality, w: Optional[StateMap], H, rho, t: float) -> Report:
    """Trace distance between evolutions under ``Phi~(H)`` and ``Phi(H)``, against ``2 eps k(H) t + eta``.

    ``rho`` is either a target-space state or a source state, which is then
    encoded with the state map ``w``.  It must satisfy ``E(I) rho = rho``
    (``E = Phi / f``) and lie inside ``S``.
    """
    if t < 0:
        raise InvariantError("t must be non-negative")
    H = as_hermitian(H)
    r = as_hermitian(rho).matrix
    if r.shape[0] == phi.n and phi.n != phi.m:
        if w is None:
            raise UnencodedState("a source-space state needs a state map to encode it")
        r = apply_state_map(phi.exact, w, r).matrix
    if r.shape[0] != phi.m:
        raise DimMismatch(f"state has dim {r.shape[0]}, expected {phi.n} or {phi.m}")
    ident = phi.exact.encode(np.eye(phi.n))
    leak = max(float(np.max(np.abs(ident @ r - r))), float(np.max(np.abs(phi.S @ r @ phi.S - r))))
    if leak > ENCODED_ATOL:
        raise UnencodedState(f"state leaves the encoded subspace (deviation {leak:.3e})")
    Ut = evolution(phi.perturbed(H), t)
    Vt = evolution(apply_map(phi.exact, H), t)
    lhs = trace_norm(hermitian_part(Ut @ r @ Ut.conj().T - Vt @ r @ Vt.conj().T))
    kH = phi.k(H)
    return bound_report("dynamics", lhs, 2 * phi.epsilon * kH * t + phi.eta, t=float(t), k=kH)

"""Dense complex linear algebra for small Hermitian problems.

Everything here works on plain ``numpy`` arrays underneath; the thin
wrapper types only exist to hold validated, read-only matrices.  The
eigensolver is a cyclic Jacobi method with complex rotations, so no
LAPACK routine is involved in any spectral computation of the package.
"""
from __future__ import annotations

from typing import Callable, Tuple, Union

import numpy as np
from numba import njit

from .errors import InvalidArity, InvariantError, NonConvergence, Overflow

HERMITIAN_ATOL = 1e-12
STATE_ATOL = 1e-10
PROJECTOR_ATOL = 1e-9
EXP_LIMIT = 700.0
ENTROPY_CLAMP = 1e-14

MatrixLike = Union["HermitianOperator", np.ndarray, list]


def _as_complex_matrix(matrix) -> np.ndarray:
    m = np.array(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise InvariantError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvariantError("matrix has non-finite entries")
    return m


class HermitianOperator:
    """An ``n x n`` Hermitian matrix, checked and symmetrised on construction.

    The Hermiticity check is ``max|A - A^H| <= 1e-12 * max(1, max|A|)``;
    the stored matrix is ``(A + A^H) / 2`` and is read-only.
    """

    __slots__ = ("_m",)

    def __init__(self, matrix, *, atol: float = HERMITIAN_ATOL):
        if isinstance(matrix, HermitianOperator):
            matrix = matrix.matrix
        m = _as_complex_matrix(matrix)
        scale = max(1.0, float(np.max(np.abs(m))))
        dev = float(np.max(np.abs(m - m.conj().T)))
        if dev > atol * scale:
            raise InvariantError(f"matrix is not Hermitian (max deviation {dev:.3e})")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        self._m = m

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    def is_zero(self) -> bool:
        return not np.any(self._m)

    def conj(self) -> "HermitianOperator":
        return HermitianOperator(self._m.conj())

    def __array__(self, dtype=None, copy=None):
        return self._m if dtype is None else self._m.astype(dtype)

    def __add__(self, other):
        return HermitianOperator(self._m + _matrix_of(other))

    def __sub__(self, other):
        return HermitianOperator(self._m - _matrix_of(other))

    def __mul__(self, scalar):
        if not np.isrealobj(scalar):
            return NotImplemented
        return HermitianOperator(float(scalar) * self._m)

    __rmul__ = __mul__

    def __neg__(self):
        return HermitianOperator(-self._m)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class DensityState(HermitianOperator):
    """Positive semidefinite, unit-trace Hermitian operator (tolerance 1e-10)."""

    __slots__ = ()

    def __init__(self, matrix, *, atol: float = STATE_ATOL):
        super().__init__(matrix)
        tr = float(np.trace(self.matrix).real)
        if abs(tr - 1.0) > atol:
            raise InvariantError(f"state trace {tr!r} differs from 1")
        lo = float(eigvalsh(self)[0])
        if lo < -atol:
            raise InvariantError(f"state has negative eigenvalue {lo:.3e}")


class Projector(HermitianOperator):
    """Hermitian idempotent, ``P @ P == P`` within 1e-9."""

    __slots__ = ()

    def __init__(self, matrix, *, atol: float = PROJECTOR_ATOL):
        super().__init__(matrix)
        m = self.matrix
        if float(np.max(np.abs(m @ m - m))) > atol:
            raise InvariantError("matrix is not idempotent")

    @property
    def rank(self) -> int:
        return int(round(float(np.trace(self.matrix).real)))


def _matrix_of(x) -> np.ndarray:
    if isinstance(x, HermitianOperator):
        return x.matrix
    return np.asarray(x, dtype=complex)


def as_hermitian(x: MatrixLike) -> HermitianOperator:
    return x if isinstance(x, HermitianOperator) else HermitianOperator(x)


def hermitian_part(x: np.ndarray) -> HermitianOperator:
    """Wrap a matrix that is Hermitian up to rounding of the computation producing it."""
    x = np.asarray(x, dtype=complex)
    return HermitianOperator(0.5 * (x + x.conj().T))


# ---------------------------------------------------------------------------
# Eigensolver
# ---------------------------------------------------------------------------

@njit(cache=True)
def _jacobi_sweeps(a, v, tol, max_sweeps):
    """In-place cyclic Jacobi; returns the number of sweeps used, or -1."""
    n = a.shape[0]
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j].real ** 2 + a[i, j].imag ** 2
        if np.sqrt(off) <= tol:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                phase = np.conj(apq) / mag
                theta = (aqq - app) / (2.0 * mag)
                sgn = 1.0 if theta >= 0.0 else -1.0
                t = sgn / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                g_qp = -s * phase
                g_qq = c * phase
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = akp * c + akq * g_qp
                    a[k, q] = akp * s + akq * g_qq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk + np.conj(g_qp) * aqk
                    a[q, k] = s * apk + np.conj(g_qq) * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * mag
                a[q, q] = aqq + t * mag
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = vkp * c + vkq * g_qp
                    v[k, q] = vkp * s + vkq * g_qq
    return -1


def eig_hermitian(A: MatrixLike, *, max_sweeps: int = 100) -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-decompose a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns ``(values, V)`` with ``values`` sorted ascending and the columns of
    ``V`` the matching orthonormal eigenvectors, so ``A = V diag(values) V^H``.
    Each rotation first removes the phase of ``a_pq`` with a diagonal unitary
    and then applies the usual real symmetric Jacobi rotation.

    Raises:
        NonConvergence: if the off-diagonal Frobenius norm has not dropped below
            ``1e-15 * ||A||_F`` after ``max_sweeps`` sweeps.
    """
    a = np.array(as_hermitian(A).matrix, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = float(np.linalg.norm(a))
    if n > 1 and scale > 0.0:
        if _jacobi_sweeps(a, v, 1e-15 * scale, max_sweeps) < 0:
            raise NonConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    values = np.real(np.diag(a)).copy()
    order = np.argsort(values, kind="stable")
    return values[order], v[:, order]


def eigvalsh(A: MatrixLike) -> np.ndarray:
    """Sorted spectrum (with multiplicity) of a Hermitian operator."""
    return eig_hermitian(A)[0]


def apply_function(A: MatrixLike, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """``V fn(Lambda) V^H``; ``fn`` acts elementwise on the eigenvalues."""
    w, v = eig_hermitian(A)
    return (v * fn(w)) @ v.conj().T


def _check_exponent(w: np.ndarray, s: complex) -> None:
    worst = float(np.max(np.abs(s * w))) if w.size else 0.0
    if worst > EXP_LIMIT:
        raise Overflow(f"exponent magnitude {worst:.4g} exceeds {EXP_LIMIT}")


def expm_hermitian(A: MatrixLike, s: float) -> HermitianOperator:
    """``exp(s A)`` for real ``s`` via the eigendecomposition of ``A``."""
    if not np.isfinite(s):
        raise ValueError("s must be finite")
    A = as_hermitian(A)
    if s == 0:
        return HermitianOperator(np.eye(A.dim))
    w, v = eig_hermitian(A)
    _check_exponent(w, s)
    return hermitian_part((v * np.exp(s * w)) @ v.conj().T)


def trace_exp(spectrum: np.ndarray, s: float) -> float:
    """``Tr exp(s A)`` given the spectrum of ``A``; same overflow contract as expm."""
    spectrum = np.asarray(spectrum, dtype=float)
    _check_exponent(spectrum, s)
    return float(np.sum(np.exp(s * spectrum)))


def evolution(H: MatrixLike, t: float) -> np.ndarray:
    """The unitary ``exp(-i H t)``; exactly the identity at ``t = 0``."""
    if t == 0:
        return np.eye(as_hermitian(H).dim, dtype=complex)
    w, v = eig_hermitian(H)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def von_neumann_entropy(rho: MatrixLike) -> float:
    """``-Tr rho ln rho`` in nats; eigenvalues below 1e-14 count as zero."""
    if not isinstance(rho, DensityState):
        rho = DensityState(rho)
    lam = eigvalsh(rho)
    lam = lam[lam > ENTROPY_CLAMP]
    return float(-np.sum(lam * np.log(lam)))


def operator_norm(A: MatrixLike) -> float:
    w = eigvalsh(A)
    return float(np.max(np.abs(w)))


def trace_norm(A: MatrixLike) -> float:
    return float(np.sum(np.abs(eigvalsh(A))))


def spectral_norm(X) -> float:
    """Largest singular value of an arbitrary (possibly rectangular) matrix."""
    X = np.asarray(X, dtype=complex)
    g = X.conj().T @ X if X.shape[0] >= X.shape[1] else X @ X.conj().T
    return float(np.sqrt(max(0.0, eigvalsh(hermitian_part(g))[-1])))


# ---------------------------------------------------------------------------
# Random ensembles
# ---------------------------------------------------------------------------

def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)


def _ginibre(n: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)


def random_unitary(n: int, seed: int | np.random.Generator) -> np.ndarray:
    """Haar-random ``n x n`` unitary: QR of a Ginibre matrix with R's diagonal phases removed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)
    q, r = np.linalg.qr(_ginibre(n, rng))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(n: int, seed: int | np.random.Generator) -> HermitianOperator:
    """GUE-distributed Hermitian matrix."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)
    g = _ginibre(n, rng)
    return HermitianOperator(0.5 * (g + g.conj().T))


def random_state(n: int, seed: int | np.random.Generator) -> DensityState:
    """Full-rank density matrix ``G G^H / Tr(G G^H)`` from a Ginibre ``G``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)
    g = _ginibre(n, rng)
    w = g @ g.conj().T
    w = 0.5 * (w + w.conj().T)
    return DensityState(w / np.trace(w).real)


def random_projector(n: int, rank: int, seed: int | np.random.Generator) -> Projector:
    rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)
    u = random_unitary(n, rng)[:, :rank]
    return Projector(u @ u.conj().T)


# ---------------------------------------------------------------------------
# Block constructions
# ---------------------------------------------------------------------------

def block_diag(*blocks: np.ndarray) -> np.ndarray:
    size = sum(b.shape[0] for b in blocks)
    out = np.zeros((size, size), dtype=complex)
    i = 0
    for b in blocks:
        k = b.shape[0]
        out[i:i + k, i:i + k] = b
        i += k
    return out


def block_embed(A: MatrixLike, p: int, q: int) -> HermitianOperator:
    """``A`` repeated ``p`` times then ``conj(A)`` repeated ``q`` times, block-diagonally."""
    if p < 0 or q < 0 or p + q < 1:
        raise InvalidArity(f"need p, q >= 0 and p + q >= 1, got p={p}, q={q}")
    m = as_hermitian(A).matrix
    return HermitianOperator(block_diag(*([m] * p + [m.conj()] * q)))

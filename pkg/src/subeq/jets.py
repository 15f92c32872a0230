"""Small dense linear algebra on 2-jets.

A 2-jet over a point of R^n is a triple ``(r, p, A)`` with ``r`` real,
``p`` an n-vector and ``A`` a symmetric n x n matrix.  Everything here is
exact up to floating point (LAPACK spectra) and meant for n <= 16.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

MAX_DIM = 16
SYM_TOL = 1e-12


class NotSymmetricError(ValueError):
    pass


class GardingRootError(ArithmeticError):
    """Raised when the sigma_k polynomial does not look hyperbolic.

    This signals an internal defect, not bad user input: sigma_k(A + sI) is
    real rooted for every symmetric ``A``.
    """

    def __init__(self, msg, coeffs=None):
        super().__init__(msg)
        self.coeffs = coeffs


def sym_mat(A, tol=SYM_TOL):
    """Validate and return ``A`` as a float symmetric matrix.

    The result is exactly symmetrized so downstream kernels never see
    round-off asymmetry.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if n < 1 or n > MAX_DIM:
        raise ValueError(f"dimension {n} outside supported range 1..{MAX_DIM}")
    asym = np.max(np.abs(A - A.T)) if n > 1 else 0.0
    if asym > tol:
        raise NotSymmetricError(f"matrix not symmetric (max asymmetry {asym:.3e})")
    return 0.5 * (A + A.T)


@dataclass(frozen=True, eq=False)
class Jet2:
    """Point ``(r, p, A)`` of the 2-jet fibre over R^n."""

    r: float
    p: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        A = sym_mat(self.A)
        p = np.array(self.p, dtype=float).reshape(-1)
        if p.shape[0] != A.shape[0]:
            raise ValueError(f"gradient has length {p.shape[0]}, hessian is {A.shape}")
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "A", A)

    @property
    def n(self):
        return self.A.shape[0]

    @classmethod
    def zero(cls, n):
        return cls(0.0, np.zeros(n), np.zeros((n, n)))

    @classmethod
    def hessian(cls, A, r=0.0):
        """Pure second-order jet ``(r, 0, A)``."""
        A = np.asarray(A, dtype=float)
        return cls(r, np.zeros(A.shape[0]), A)

    def __add__(self, other):
        return Jet2(self.r + other.r, self.p + other.p, self.A + other.A)

    def __sub__(self, other):
        return Jet2(self.r - other.r, self.p - other.p, self.A - other.A)

    def __neg__(self):
        return Jet2(-self.r, -self.p, -self.A)

    def __mul__(self, t):
        return Jet2(t * self.r, t * self.p, t * self.A)

    __rmul__ = __mul__

    def norm(self):
        return float(np.sqrt(self.r ** 2 + self.p @ self.p + np.sum(self.A * self.A)))

    def reduced(self):
        """Same jet with the value slot cleared."""
        return Jet2(0.0, self.p, self.A)

    def with_r(self, r):
        return Jet2(r, self.p, self.A)

    def as_vector(self):
        iu = np.triu_indices(self.n)
        return np.concatenate([[self.r], self.p, self.A[iu]])

    def allclose(self, other, atol=1e-12):
        return (abs(self.r - other.r) <= atol
                and np.allclose(self.p, other.p, rtol=0, atol=atol)
                and np.allclose(self.A, other.A, rtol=0, atol=atol))

    def __repr__(self):
        return f"Jet2(r={self.r!r}, p={self.p.tolist()!r}, A={self.A.tolist()!r})"


def jet_distance(J1, J2):
    """Euclidean-Frobenius distance between two jets over the same point."""
    if J1.n != J2.n:
        raise ValueError("jets live over different dimensions")
    return (J1 - J2).norm()


# ---------------------------------------------------------------- spectra

def ordered_eigenvalues(A):
    """Eigenvalues of a symmetric matrix, ascending, multiplicities repeated."""
    return np.linalg.eigvalsh(sym_mat(A))


def pfold_eigen_sums(A, p):
    """All C(n, p) sums of p distinct ordered eigenvalues, sorted ascending."""
    lam = ordered_eigenvalues(A)
    n = lam.shape[0]
    if not 1 <= p <= n:
        raise ValueError(f"p={p} outside 1..{n}")
    sums = [lam[list(idx)].sum() for idx in combinations(range(n), p)]
    return np.sort(np.array(sums))


def sigma_elementary(A):
    """Elementary symmetric functions ``(sigma_1, ..., sigma_n)`` of the spectrum."""
    lam = ordered_eigenvalues(A)
    return _sigma_from_roots(lam)


def _sigma_from_roots(lam):
    n = len(lam)
    e = np.zeros(n + 1)
    e[0] = 1.0
    for x in lam:
        e[1:] = e[1:] + x * e[:-1]
    return e[1:]


def _shifted_sigma_coeffs(sig, n, k):
    # sigma_k(A + sI) = sum_j C(n-j, k-j) sigma_j(A) s^{k-j}; highest power first
    full = np.concatenate([[1.0], sig])
    return np.array([comb(n - j, k - j) * full[j] for j in range(k + 1)])


def garding_roots_sigma_k(A, k):
    """Garding eigenvalues of sigma_k at ``A``, sorted ascending.

    These are the negatives of the (real) roots of ``s -> sigma_k(A + sI)``.
    The roots are found by walking down the derivative chain
    det(A + sI) -> sigma_{n-1}(A + sI) -> ... -> sigma_k(A + sI):
    each polynomial is (up to a constant) the derivative of the previous one,
    so its roots interlace and can be bracketed exactly, repeated roots
    included.
    """
    A = sym_mat(A)
    n = A.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    lam = np.linalg.eigvalsh(A)
    sig = _sigma_from_roots(lam)
    roots = np.sort(-lam)  # zeros of det(A + sI)
    scale = 1.0 + np.max(np.abs(lam))
    for m in range(n - 1, k - 1, -1):
        coeffs = _shifted_sigma_coeffs(sig, n, m)
        prev = _shifted_sigma_coeffs(sig, n, m + 1)
        roots = _interlaced_roots(prev, coeffs, roots, scale)
    coeffs = _shifted_sigma_coeffs(sig, n, k)
    resid = np.abs(np.polyval(coeffs, roots))
    bound = 1e-8 * np.polyval(np.abs(coeffs), np.abs(roots) + scale)
    if np.any(resid > bound):
        raise GardingRootError(
            f"sigma_{k} root residual {resid.max():.3e} exceeds {bound.max():.3e}", coeffs)
    return np.sort(-roots)


def _interlaced_roots(prev, coeffs, prev_roots, scale):
    # roots of `coeffs` (proportional to the derivative of `prev`) lie one per
    # gap between consecutive roots of `prev`; in each gap `prev` has a fixed
    # sign and its derivative flips from that sign to the opposite one
    out = []
    tiny = 1e-13 * scale
    for a, b in zip(prev_roots[:-1], prev_roots[1:]):
        if b - a <= tiny:
            out.append(0.5 * (a + b))
            continue
        sgn = np.sign(np.polyval(prev, 0.5 * (a + b)))
        lo, hi = a, b
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            val = np.polyval(coeffs, mid)
            if val == 0.0:
                lo = hi = mid
                break
            if np.sign(val) == sgn:
                lo = mid
            else:
                hi = mid
        out.append(0.5 * (lo + hi))
    return np.array(out)


def garding_roots_companion(A, k):
    """Companion-matrix route to the sigma_k Garding eigenvalues.

    Kept as an independent cross-check; it loses accuracy on clustered roots.
    Returns ``(values, max_imag)``.
    """
    A = sym_mat(A)
    n = A.shape[0]
    sig = sigma_elementary(A)
    roots = np.roots(_shifted_sigma_coeffs(sig, n, k))
    return np.sort(-roots.real), float(np.max(np.abs(roots.imag), initial=0.0))


# ------------------------------------------------- complex / quaternionic

def _check_orthogonal(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square")
    if np.max(np.abs(M.T @ M - np.eye(M.shape[0]))) > 1e-12:
        raise ValueError(f"{name} is not orthogonal")
    return M


_J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


class ComplexStructure:
    """Orthogonal ``J`` on R^{2m} with ``J^2 = -I``.

    The standard structure pairs coordinates as (x1, y1, x2, y2, ...).
    """

    def __init__(self, J):
        J = _check_orthogonal(J, "J")
        if J.shape[0] % 2:
            raise ValueError("complex structure needs even dimension")
        if np.max(np.abs(J @ J + np.eye(J.shape[0]))) > 1e-12:
            raise ValueError("J^2 != -I")
        self.J = J

    @classmethod
    def standard(cls, m):
        return cls(np.kron(np.eye(m), _J2))

    @property
    def dim(self):
        return self.J.shape[0]


# left multiplication by i, j, k on H = R^4 with basis (1, i, j, k)
_QI = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)
_QJ = np.array([[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]], dtype=float)
_QK = np.array([[0, 0, 0, -1], [0, 0, -1, 0], [0, 1, 0, 0], [1, 0, 0, 0]], dtype=float)


class QuaternionicStructure:
    """Orthogonal triple ``(I, J, K)`` satisfying the quaternion relations."""

    def __init__(self, I, J, K):
        I = _check_orthogonal(I, "I")
        J = _check_orthogonal(J, "J")
        K = _check_orthogonal(K, "K")
        n = I.shape[0]
        if n % 4 or J.shape[0] != n or K.shape[0] != n:
            raise ValueError("quaternionic structure needs matching dimensions divisible by 4")
        E = np.eye(n)
        checks = [I @ I + E, J @ J + E, K @ K + E, I @ J - K, J @ K - I, K @ I - J]
        if max(np.max(np.abs(c)) for c in checks) > 1e-12:
            raise ValueError("quaternion identities violated")
        self.I, self.J, self.K = I, J, K

    @classmethod
    def standard(cls, m):
        E = np.eye(m)
        return cls(np.kron(E, _QI), np.kron(E, _QJ), np.kron(E, _QK))

    @property
    def dim(self):
        return self.I.shape[0]


def hermitian_part_complex(A, C=None):
    """Projection ``(A - JAJ)/2`` onto the J-hermitian symmetric matrices."""
    A = sym_mat(A)
    if C is None:
        C = ComplexStructure.standard(A.shape[0] // 2) if A.shape[0] % 2 == 0 else None
    if C is None or C.dim != A.shape[0]:
        raise ValueError(f"dimension {A.shape[0]} incompatible with complex structure")
    J = C.J
    return sym_mat(0.5 * (A - J @ A @ J), tol=1e-9)


def hermitian_part_quaternionic(A, Q=None):
    """Projection ``(A - IAI - JAJ - KAK)/4`` onto quaternionic hermitian matrices."""
    A = sym_mat(A)
    if Q is None:
        Q = QuaternionicStructure.standard(A.shape[0] // 4) if A.shape[0] % 4 == 0 else None
    if Q is None or Q.dim != A.shape[0]:
        raise ValueError(f"dimension {A.shape[0]} incompatible with quaternionic structure")
    I, J, K = Q.I, Q.J, Q.K
    return sym_mat(0.25 * (A - I @ A @ I - J @ A @ J - K @ A @ K), tol=1e-9)


# ------------------------------------------------------------------ planes

class PlaneProjector:
    """Orthogonal projector onto a p-plane in R^n."""

    def __init__(self, P, p=None):
        P = sym_mat(P, tol=1e-10)
        tr = float(np.trace(P))
        p = int(round(tr)) if p is None else p
        if np.max(np.abs(P @ P - P)) > 1e-10 or abs(tr - p) > 1e-10:
            raise ValueError("not an orthogonal projector of the stated rank")
        self.P = P
        self.p = p

    @classmethod
    def from_basis(cls, B):
        """Projector onto the column span of ``B`` (n x p, any basis)."""
        B = np.asarray(B, dtype=float)
        Q, _ = np.linalg.qr(B)
        return cls(Q @ Q.T, B.shape[1])

    def basis(self):
        w, V = np.linalg.eigh(self.P)
        return V[:, np.argsort(w)[::-1][: self.p]]


def trace_on_plane(A, xi):
    """``<A, P_xi>``: the trace of ``A`` restricted to the plane ``xi``."""
    A = sym_mat(A)
    if xi.P.shape != A.shape:
        raise ValueError("plane and matrix dimensions differ")
    return float(np.sum(A * xi.P))


def trace_on_basis(A, E):
    """Trace of ``A`` restricted to the span of orthonormal columns ``E``."""
    return float(np.trace(E.T @ A @ E))


# ---------------------------------------------------------------- sampling

def random_sym(rng, n, scale=1.0):
    G = rng.standard_normal((n, n)) * scale
    return 0.5 * (G + G.T)


def random_psd(rng, n, scale=1.0):
    G = rng.standard_normal((n, n)) * scale
    return G @ G.T / n


def random_orthogonal(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def random_jet(rng, n, scale=1.0):
    return Jet2(rng.standard_normal() * scale, rng.standard_normal(n) * scale,
                random_sym(rng, n, scale))

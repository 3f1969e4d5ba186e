"""Quaternion scalars and quaternionic matrix algebra.

A quaternionic n x n matrix A = X + Y*j (X, Y complex n x n) is carried as its
complex 2n x 2n embedding

    chi(A) = [[ X,        Y       ],
              [ -conj(Y), conj(X) ]],

which is an injective ring homomorphism: chi(A @ B) = chi(A) @ chi(B) and
chi(A*) = chi(A)^H.  A is hyperhermitian (conj(a_ij) = a_ji) exactly when
chi(A) is complex hermitian, and then the 2n eigenvalues of chi(A) are the n
real eigenvalues of A, each doubled.  The image of chi is characterised by

    M @ JP == JP @ conj(M),    JP = [[0, I], [-I, 0]],

which is what `structure_residual` measures.

Batched helpers operate on stacked embeddings of shape ``(..., 2n, 2n)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import symfun
from .errors import StructureError

__all__ = [
    "Quaternion",
    "QMatrix",
    "realize",
    "eigenvalues",
    "eig",
    "moore_det",
    "principal_minor_det",
    "sigma_k_matrix",
    "sigma_k_minor_sum",
    "sigma_k_coefficient",
    "char_expansion",
    "newton_transform",
    "pair_real",
    "random_hyperhermitian",
    "random_qmatrix",
    "random_symplectic_unitary",
]

# ---------------------------------------------------------------------------
# scalar quaternions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Quaternion:
    """q = w + x*i + y*j + z*k with the standard Hamilton product."""

    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, other):
        other = _as_quaternion(other)
        return Quaternion(self.w + other.w, self.x + other.x, self.y + other.y, self.z + other.z)

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_quaternion(other)
        return Quaternion(self.w - other.w, self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self):
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other):
        other = _as_quaternion(other)
        a, b = self, other
        return Quaternion(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )

    def __rmul__(self, other):
        return _as_quaternion(other) * self

    def conjugate(self):
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm_sq(self):
        return self.w**2 + self.x**2 + self.y**2 + self.z**2

    def __abs__(self):
        return math.sqrt(self.norm_sq())

    def complex_pair(self):
        """(X, Y) with q = X + Y*j, complex i identified with quaternion i."""
        return complex(self.w, self.x), complex(self.y, self.z)

    @classmethod
    def from_complex_pair(cls, a, b):
        a, b = complex(a), complex(b)
        return cls(a.real, a.imag, b.real, b.imag)

    def isclose(self, other, tol=1e-12):
        return abs(self - _as_quaternion(other)) <= tol


def _as_quaternion(v):
    if isinstance(v, Quaternion):
        return v
    if isinstance(v, (int, float)):
        return Quaternion(float(v))
    raise TypeError(f"cannot interpret {type(v).__name__} as a quaternion")


I = Quaternion(0.0, 1.0, 0.0, 0.0)
J = Quaternion(0.0, 0.0, 1.0, 0.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)


# ---------------------------------------------------------------------------
# embedding helpers (array level, batch friendly)
# ---------------------------------------------------------------------------


def jprime(n):
    """The antilinear-structure matrix JP = [[0, I_n], [-I_n, 0]]."""
    Jp = np.zeros((2 * n, 2 * n))
    Jp[:n, n:] = np.eye(n)
    Jp[n:, :n] = -np.eye(n)
    return Jp


def chi_from_split(X, Y):
    """Assemble the 2n x 2n embedding from the complex split A = X + Y*j."""
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    n = X.shape[-1]
    M = np.zeros(X.shape[:-2] + (2 * n, 2 * n), dtype=complex)
    M[..., :n, :n] = X
    M[..., :n, n:] = Y
    M[..., n:, :n] = -Y.conj()
    M[..., n:, n:] = X.conj()
    return M


def structure_residual(M):
    """Max deviation of M from the image of chi (the quaternionic subalgebra)."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[-1] // 2
    Jp = jprime(n)
    r = M @ Jp - Jp @ M.conj()
    return float(np.abs(r).max())


def _is_exactly_real_diagonal(M):
    n2 = M.shape[-1]
    off = M - np.einsum("...ii->...i", M)[..., None] * np.eye(n2)
    return not off.any() and not M.imag.any()


def chi_eigvals(M, tol_scale=1e-8):
    """Eigenvalues of stacked hyperhermitian embeddings, pair-collapsed.

    Input ``(..., 2n, 2n)`` hermitian with the chi structure; output
    ``(..., n)`` ascending.  The adjacent-pair spread is checked against
    tol_scale * (1 + max|eig|); violation raises StructureError (it signals a
    non-hyperhermitian input or an eigensolver failure, never silently fixed).
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[-1] // 2
    if _is_exactly_real_diagonal(M):
        d = np.einsum("...ii->...i", M).real
        return np.sort(d[..., :n], axis=-1)
    w = np.linalg.eigvalsh(M)
    return _collapse_pairs(w, 2, tol_scale)


def _collapse_pairs(w, mult, tol_scale):
    shape = w.shape[:-1] + (w.shape[-1] // mult, mult)
    grouped = w.reshape(shape)
    lam = grouped.mean(axis=-1)
    spread = grouped.max(axis=-1) - grouped.min(axis=-1)
    scale = 1.0 + np.abs(w).max(initial=0.0)
    worst = spread.max(initial=0.0)
    if worst > tol_scale * scale:
        raise StructureError(
            f"eigenvalue multiplicity {mult} violated: spread {worst:.3e} "
            f"exceeds {tol_scale:.1e} * (1 + |A|) = {tol_scale * scale:.3e}"
        )
    return lam


def chi_eigh(M, tol_scale=1e-8):
    """Batched (eigenvalues, eigenvectors) of hyperhermitian embeddings.

    Eigenvalues come back pair-collapsed ``(..., n)``; the eigenvector matrix
    is the raw complex one from eigh, shape ``(..., 2n, 2n)``.  Spectral
    functions built from these (Newton transforms, inverse square roots)
    automatically land back in the quaternionic subalgebra because paired
    eigenvalues receive identical weights.
    """
    M = np.asarray(M, dtype=complex)
    w, V = np.linalg.eigh(M)
    lam = _collapse_pairs(w, 2, tol_scale)
    return lam, V


def chi_delete(M, i):
    """Remove quaternionic row/column i: drops embedding rows/cols {i, n+i}."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[-1] // 2
    keep = [a for a in range(n) if a != i]
    idx = np.array(keep + [a + n for a in keep], dtype=int)
    return M[..., idx[:, None], idx[None, :]]


def spectral_apply(M, values_fn, tol_scale=1e-8):
    """Apply a spectral function to stacked embeddings.

    ``values_fn(lam)`` maps collapsed eigenvalues ``(..., n)`` to new weights
    ``(..., n)``; the result is reassembled with each weight doubled.
    """
    lam, V = chi_eigh(M, tol_scale)
    s = np.asarray(values_fn(lam), dtype=float)
    sdup = np.repeat(s, 2, axis=-1)
    return np.einsum("...ij,...j,...kj->...ik", V, sdup, V.conj())


def newton_transform_chi(M, m, tol_scale=1e-8):
    """Embedding of the m-th Newton transform: eigenvalue i -> sigma_m(lam|i)."""
    return spectral_apply(M, lambda lam: symfun.sigma_excl_all(lam, m), tol_scale)


# ---------------------------------------------------------------------------
# QMatrix
# ---------------------------------------------------------------------------


class QMatrix:
    """A quaternionic n x n matrix, stored as its complex 2n x 2n embedding."""

    __slots__ = ("chi", "n")

    def __init__(self, chi, validate=True, tol=1e-10):
        chi = np.asarray(chi, dtype=complex)
        if chi.ndim != 2 or chi.shape[0] != chi.shape[1] or chi.shape[0] % 2:
            raise ValueError(f"embedding must be square of even size, got {chi.shape}")
        if validate:
            r = structure_residual(chi)
            scale = 1.0 + float(np.abs(chi).max(initial=0.0))
            if r > tol * scale:
                raise StructureError(f"not a quaternionic embedding: residual {r:.3e}")
        self.chi = chi
        self.n = chi.shape[0] // 2

    # -- constructors --------------------------------------------------

    @classmethod
    def from_components(cls, w, x, y, z):
        """From the four real component matrices of A = A0 + i A1 + j A2 + k A3."""
        w, x, y, z = (np.asarray(c, dtype=float) for c in (w, x, y, z))
        if not (w.shape == x.shape == y.shape == z.shape) or w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("component matrices must be square and of equal shape")
        return cls(chi_from_split(w + 1j * x, y + 1j * z), validate=False)

    @classmethod
    def from_entries(cls, rows):
        """From a nested list of Quaternion / real entries."""
        qrows = [[_as_quaternion(v) for v in row] for row in rows]
        n = len(qrows)
        if any(len(r) != n for r in qrows):
            raise ValueError("entry table must be square")
        comp = np.zeros((4, n, n))
        for a, row in enumerate(qrows):
            for b, q in enumerate(row):
                comp[:, a, b] = (q.w, q.x, q.y, q.z)
        return cls.from_components(*comp)

    @classmethod
    def identity(cls, n):
        return cls(np.eye(2 * n, dtype=complex), validate=False)

    @classmethod
    def diag(cls, values):
        values = np.asarray(values, dtype=float)
        return cls(np.diag(np.concatenate([values, values])).astype(complex), validate=False)

    # -- accessors -----------------------------------------------------

    @property
    def X(self):
        return self.chi[: self.n, : self.n]

    @property
    def Y(self):
        return self.chi[: self.n, self.n :]

    def components(self):
        return self.X.real, self.X.imag, self.Y.real, self.Y.imag

    def entry(self, a, b):
        return Quaternion.from_complex_pair(self.X[a, b], self.Y[a, b])

    # -- algebra ---------------------------------------------------------

    def __matmul__(self, other):
        return QMatrix(self.chi @ other.chi, validate=False)

    def __add__(self, other):
        return QMatrix(self.chi + other.chi, validate=False)

    def __sub__(self, other):
        return QMatrix(self.chi - other.chi, validate=False)

    def __mul__(self, scalar):
        return QMatrix(self.chi * float(scalar), validate=False)

    __rmul__ = __mul__

    def conj_transpose(self):
        return QMatrix(self.chi.conj().T, validate=False)

    def shift(self, t):
        """A + t * Id."""
        return QMatrix(self.chi + float(t) * np.eye(2 * self.n), validate=False)

    def norm(self):
        """Frobenius norm of the quaternionic matrix (not of the embedding)."""
        return float(np.linalg.norm(self.chi)) / math.sqrt(2.0)

    def hyperhermitian_residual(self):
        return float(np.abs(self.chi - self.chi.conj().T).max())

    def is_hyperhermitian(self, tol=1e-10):
        scale = 1.0 + float(np.abs(self.chi).max(initial=0.0))
        return self.hyperhermitian_residual() <= tol * scale

    def __repr__(self):
        return f"QMatrix(n={self.n})"


def _require_hyperhermitian(A, tol=1e-8):
    if not A.is_hyperhermitian(tol):
        raise StructureError(
            f"matrix is not hyperhermitian (residual {A.hyperhermitian_residual():.3e})"
        )


# ---------------------------------------------------------------------------
# realization matrix
# ---------------------------------------------------------------------------


def realize(A):
    """The real 4n x 4n realization in the block layout

        [[A0, -A1, -A2, -A3],
         [A1,  A0, -A3,  A2],
         [A2,  A3,  A0, -A1],
         [A3, -A2,  A1,  A0]];

    a ring homomorphism on quaternionic matrices, symmetric when A is
    hyperhermitian, with every eigenvalue of multiplicity divisible by 4.
    """
    A0, A1, A2, A3 = A.components()
    return np.block(
        [
            [A0, -A1, -A2, -A3],
            [A1, A0, -A3, A2],
            [A2, A3, A0, -A1],
            [A3, -A2, A1, A0],
        ]
    )


# ---------------------------------------------------------------------------
# spectra and determinants
# ---------------------------------------------------------------------------


def eigenvalues(A, route="complex", tol_scale=1e-8):
    """Real eigenvalues of a hyperhermitian matrix, ascending.

    route="complex" solves the 2n x 2n embedding (eigenvalues doubled);
    route="real" solves the 4n x 4n realization (quadrupled).  Either way the
    multiplicity pattern is enforced at width tol_scale * (1 + |A|).
    """
    _require_hyperhermitian(A)
    scale_tol = tol_scale
    if route == "complex":
        return chi_eigvals(A.chi, scale_tol)
    if route == "real":
        w = np.linalg.eigvalsh(realize(A))
        return _collapse_pairs(w, 4, scale_tol)
    raise ValueError(f"unknown route {route!r}")


def eig(A, tol_scale=1e-8):
    """Eigenvalues (ascending) and a diagonalizing quaternionic unitary C.

    C satisfies C* C = Id and C* A C = diag(eigenvalues); the eigenvector
    pairing of the complex embedding is resolved so that C is genuinely
    quaternionic (structure residual at roundoff level).
    """
    _require_hyperhermitian(A)
    n = A.n
    M = A.chi
    w, V = np.linalg.eigh(M)
    lam = _collapse_pairs(w, 2, tol_scale)
    Jp = jprime(n)
    cluster_tol = tol_scale * (1.0 + float(np.abs(w).max(initial=0.0)))

    cols = []
    i = 0
    while i < 2 * n:
        j = i
        while j < 2 * n and w[j] - w[i] <= cluster_tol:
            j += 1
        block = V[:, i:j].copy()
        while block.shape[1] > 0:
            w1 = block[:, 0]
            w1 = w1 / np.linalg.norm(w1)
            w2 = Jp @ w1.conj()
            w2 = block @ (block.conj().T @ w2)
            w2 = w2 / np.linalg.norm(w2)
            cols.append(w1)
            proj = block - np.outer(w1, w1.conj() @ block) - np.outer(w2, w2.conj() @ block)
            if proj.shape[1] <= 2:
                break
            u, s, _ = np.linalg.svd(proj, full_matrices=False)
            block = u[:, : block.shape[1] - 2]
        i = j
    if len(cols) != n:
        raise StructureError(f"eigenvector pairing produced {len(cols)} of {n} columns")
    W = np.column_stack(cols)
    U = np.column_stack([W, -(Jp @ W.conj())])
    C = QMatrix(U, validate=True, tol=1e-8)
    return lam, C


def moore_det(A, tol_scale=1e-8):
    """Moore determinant: the product of the real eigenvalues.

    Signed (unlike det(realize(A))^(1/4)); satisfies moore_det(Id) = 1 and
    |moore_det(A)|^4 = det(realize(A)).
    """
    lam = eigenvalues(A, tol_scale=tol_scale)
    return float(np.prod(lam))


def principal_minor_det(A, indices, tol_scale=1e-8):
    """Moore determinant of A with the rows/columns in ``indices`` deleted.

    ``indices`` is a 0-based set; the full index set yields 1 by convention,
    the empty set yields moore_det(A).  Deleting a symmetric row/column set
    preserves hyperhermitianness, so the sub-determinant is well defined.
    """
    idx = sorted(set(int(i) for i in indices))
    n = A.n
    if any(i < 0 or i >= n for i in idx):
        raise ValueError(f"indices out of range for n={n}: {idx}")
    M = A.chi
    for i in reversed(idx):
        M = chi_delete(M, i)
    if M.shape[-1] == 0:
        return 1.0
    lam = chi_eigvals(M, tol_scale)
    return float(np.prod(lam))


def sigma_k_matrix(A, k, tol_scale=1e-8):
    """sigma_k of the eigenvalue tuple of A.

    Equals the sum of all k x k principal minor Moore determinants and the
    coefficient of t^(n-k) in moore_det(A + t*Id); sigma_n is moore_det.
    """
    lam = eigenvalues(A, tol_scale=tol_scale)
    return float(symfun.sigma(lam, k))


def char_expansion(A, t, tol_scale=1e-8):
    """sum over index sets I of t^|I| * principal_minor_det(A, I).

    Independent minor-sum evaluation of moore_det(A + t*Id); the two routes
    agreeing is the cross-check for the sigma_k machinery.
    """
    n = A.n
    total = 0.0
    for r in range(n + 1):
        for I in itertools.combinations(range(n), r):
            total += (t**r) * principal_minor_det(A, I, tol_scale)
    return float(total)


def sigma_k_minor_sum(A, k, tol_scale=1e-8):
    """sigma_k via the sum of k x k principal minors (deleting n-k indices)."""
    n = A.n
    total = 0.0
    for I in itertools.combinations(range(n), n - k):
        total += principal_minor_det(A, I, tol_scale)
    return float(total)


def sigma_k_coefficient(A, k, tol_scale=1e-8):
    """sigma_k via polynomial coefficient extraction from moore_det(A + t*Id)."""
    n = A.n
    lam = eigenvalues(A, tol_scale=tol_scale)
    s = 1.0 + float(np.abs(lam).max(initial=0.0))
    nodes = s * (np.arange(n + 1) - n / 2.0)
    vals = [moore_det(A.shift(t), tol_scale) for t in nodes]
    coeffs = np.polyfit(nodes, vals, n)  # highest power first
    return float(coeffs[k])


def newton_transform(A, m, tol_scale=1e-8):
    """The m-th Newton transform of A: same eigenbasis, eigenvalue i mapped to
    sigma_m(lam | i).  Its pairing against a direction E gives the derivative
    of sigma_{m+1} at A."""
    _require_hyperhermitian(A)
    return QMatrix(newton_transform_chi(A.chi, m, tol_scale), validate=False)


def pair_real(S, E):
    """Real part of tr(S E) for quaternionic matrices: (1/2) tr of embeddings."""
    return float(0.5 * np.einsum("ij,ji->", S.chi, E.chi).real)


# ---------------------------------------------------------------------------
# random generation
# ---------------------------------------------------------------------------


def random_hyperhermitian(rng, n, scale=1.0):
    """Random hyperhermitian matrix with components uniform in [-scale, scale].

    Off-diagonal entries get four independent components; diagonals are real.
    """
    comp = rng.uniform(-scale, scale, size=(4, n, n))
    w = (comp[0] + comp[0].T) / 2.0
    x = (comp[1] - comp[1].T) / 2.0
    y = (comp[2] - comp[2].T) / 2.0
    z = (comp[3] - comp[3].T) / 2.0
    return QMatrix.from_components(w, x, y, z)


def random_qmatrix(rng, n, scale=1.0):
    """Random general quaternionic matrix, components uniform in [-scale, scale]."""
    comp = rng.uniform(-scale, scale, size=(4, n, n))
    return QMatrix.from_components(*comp)


def random_symplectic_unitary_chi(rng, n, count=None):
    """Stacked embeddings of random quaternionic unitaries (C* C = Id).

    Built from the eigenbasis of random hyperhermitian matrices: one
    eigenvector per doubled pair is kept and its j-partner is reconstructed,
    which lands exactly in the quaternionic subalgebra.
    """
    squeeze = count is None
    m = 1 if squeeze else int(count)
    X = rng.normal(size=(m, n, n)) + 1j * rng.normal(size=(m, n, n))
    Y = rng.normal(size=(m, n, n)) + 1j * rng.normal(size=(m, n, n))
    G = chi_from_split((X + X.conj().transpose(0, 2, 1)) / 2.0, (Y - Y.transpose(0, 2, 1)) / 2.0)
    _, V = np.linalg.eigh(G)
    W = V[..., :, 0::2]
    Jp = jprime(n)
    U = np.concatenate([W, -np.einsum("ij,...jm->...im", Jp, W.conj())], axis=-1)
    return U[0] if squeeze else U


def random_symplectic_unitary(rng, n):
    return QMatrix(random_symplectic_unitary_chi(rng, n), validate=True, tol=1e-8)

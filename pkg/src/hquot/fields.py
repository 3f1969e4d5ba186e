"""Hyperhermitian matrix fields on the flat torus.

The background 2-form is the constant identity matrix field, so wedge ratios
reduce to symmetric functions of pointwise eigenvalues:

    W^k ^ Omega^(n-k) / Omega^n   =  sigma_k(W) / C(n, k).

The quaternionic Hessian of a scalar field u has entries

    H_ab = (1/2) sum_{c,d in 0..3} e_c * conj(e_d) * d2u/dx_{4a+c} dx_{4b+d},

a hyperhermitian matrix at each point.  The normalization is anchored by the
quadratic patch test: u = |q_a|^2 produces 4 in diagonal slot (a, a).  The
matching first-derivative coefficients are

    v_b = 2^(-1/2) (d_0 u - i d_1 u - j d_2 u - k d_3 u)   (components of q_b),

stored as the 2n complex numbers of the embedding layout, so that
sum_b |v_b|^2 = |grad u|^2 / 2 and the divergence identity
integrate(w * sigma_1(H(u))) = -integrate(<v(w), v(u)>) holds.

Fields are ndarrays: scalar fields have shape grid.shape, matrix fields
grid.shape + (2n, 2n) (stacked embeddings), gradients grid.shape + (2n,).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import symfun
from .errors import ConeError
from .grid import first_derivative, second_derivative
from .quaternion import (
    chi_eigh,
    chi_eigvals,
    jprime,
    newton_transform_chi,
    structure_residual,
)

__all__ = [
    "identity_form",
    "quaternionic_hessian",
    "gradient_coefficients",
    "omega_u",
    "eig_field",
    "sigma_field",
    "sigma_excl_field",
    "in_gamma_k_field",
    "GammaFieldReport",
    "measure_epsilon",
    "check_cone_condition",
    "ConeConditionReport",
    "simultaneous_diagonalize",
    "wedge_minor_coeff",
    "newton_transform_field",
    "gradient_pairing",
    "gradient_alpha_pairing",
    "hyperhermitian_residual_field",
]

# e_c * conj(e_d) for the quaternion units (1, i, j, k), as complex pairs
# (x-part, j-part); row index c, column index d.
_UNIT_PAIRS = [(1.0 + 0j, 0j), (1j, 0j), (0j, 1.0 + 0j), (0j, 1j)]


def _qmul(a, b):
    return (a[0] * b[0] - a[1] * b[1].conjugate(), a[0] * b[1] + a[1] * b[0].conjugate())


def _qconj(a):
    return (a[0].conjugate(), -a[1])


_TABLE = [[_qmul(_UNIT_PAIRS[c], _qconj(_UNIT_PAIRS[d])) for d in range(4)] for c in range(4)]


def identity_form(grid, scale=1.0):
    """The constant identity matrix field (the flat background form)."""
    n = grid.n
    W = np.zeros(grid.shape + (2 * n, 2 * n), dtype=complex)
    W[...] = scale * np.eye(2 * n)
    return W


def quaternionic_hessian(u, grid, backend="spectral"):
    """The hyperhermitian second-derivative matrix field of u.

    Second partials are computed once per unordered axis pair, which makes
    the output hyperhermitian by construction up to rounding.
    """
    u = np.asarray(u, dtype=float)
    n = grid.n
    X = np.zeros(grid.shape + (n, n), dtype=complex)
    Y = np.zeros_like(X)
    axes = grid.active_axes
    d2 = {}
    for ii, P in enumerate(axes):
        for Q in axes[ii:]:
            d2[(P, Q)] = second_derivative(u, grid, P, Q, backend)
    for P in axes:
        a, c = divmod(P, 4)
        for Q in axes:
            b, d = divmod(Q, 4)
            tab = _TABLE[c][d]
            block = d2[(P, Q) if P <= Q else (Q, P)]
            if tab[0] != 0:
                X[..., a, b] += 0.5 * tab[0] * block
            if tab[1] != 0:
                Y[..., a, b] += 0.5 * tab[1] * block
    W = np.zeros(grid.shape + (2 * n, 2 * n), dtype=complex)
    W[..., :n, :n] = X
    W[..., :n, n:] = Y
    W[..., n:, :n] = -Y.conj()
    W[..., n:, n:] = X.conj()
    return W


def hyperhermitian_residual_field(W):
    """Max hermiticity + structure deviation over the grid (bug detector)."""
    W = np.asarray(W, dtype=complex)
    herm = float(np.abs(W - np.swapaxes(W, -1, -2).conj()).max())
    flat = W.reshape(-1, *W.shape[-2:])
    struct = max(structure_residual(flat[i]) for i in range(min(len(flat), 64)))
    return max(herm, struct)


def gradient_coefficients(u, grid, backend="spectral"):
    """First-derivative coefficients of u in the embedding layout.

    Returns shape grid.shape + (2n,): slot b carries (d_0 - i d_1)u / sqrt2
    of quaternionic coordinate b, slot n+b carries (d_2 - i d_3)u / sqrt2.
    """
    u = np.asarray(u, dtype=float)
    n = grid.n
    g = np.zeros(grid.shape + (2 * n,), dtype=complex)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for P in grid.active_axes:
        b, c = divmod(P, 4)
        d1 = first_derivative(u, grid, P, backend)
        if c == 0:
            g[..., b] += inv_sqrt2 * d1
        elif c == 1:
            g[..., b] += -1j * inv_sqrt2 * d1
        elif c == 2:
            g[..., b + n] += inv_sqrt2 * d1
        else:
            g[..., b + n] += -1j * inv_sqrt2 * d1
    return g


def omega_u(omega0, u, t, grid, backend="spectral", hessian=None):
    """omega0 + t * quaternionic_hessian(u); ``hessian`` may be precomputed."""
    if hessian is None:
        hessian = quaternionic_hessian(u, grid, backend)
    return np.asarray(omega0, dtype=complex) + float(t) * hessian


# ---------------------------------------------------------------------------
# pointwise spectra
# ---------------------------------------------------------------------------


def _n_of(W):
    return W.shape[-1] // 2


def eig_field(W, tol_scale=1e-8):
    """Pointwise eigenvalue tuples, shape grid.shape + (n,), ascending.

    n = 1 matrices are real scalars and are read off directly; exactly
    diagonal fields skip the dense solver as well.
    """
    W = np.asarray(W, dtype=complex)
    n = _n_of(W)
    if n == 1:
        return W[..., :1, 0].real.copy()
    diag = np.einsum("...ii->...i", W)
    off = W - diag[..., None, :] * np.eye(2 * n)
    if not off.any() and not diag.imag.any():
        return np.sort(diag.real[..., :n], axis=-1)
    return chi_eigvals(W, tol_scale)


def sigma_field(W, k, lam=None):
    """Pointwise sigma_k of the eigenvalue tuples (= C(n,k) x wedge ratio)."""
    if lam is None:
        lam = eig_field(W)
    return symfun.sigma(lam, k)


def sigma_excl_field(W, k, lam=None):
    """Pointwise sigma_k of the eigenvalues with entry j removed, (..., n)."""
    if lam is None:
        lam = eig_field(W)
    return symfun.sigma_excl_all(lam, k)


@dataclass
class GammaFieldReport:
    ok: bool
    worst_margin: float
    where: tuple
    order: int

    def __bool__(self):
        return self.ok


def in_gamma_k_field(W, k, lam=None):
    """Cone membership at every grid point, with the worst sigma_i slack.

    Returns a GammaFieldReport: ok iff min over points and 1 <= i <= k of
    sigma_i(eigenvalues) is strictly positive; ``where``/``order`` locate the
    minimizing point and order.
    """
    if lam is None:
        lam = eig_field(np.asarray(W, dtype=complex))
    e = symfun.elementary_all(lam, k)[..., 1 : k + 1]
    worst = float(e.min())
    flat_idx = int(np.argmin(e))
    idx = np.unravel_index(flat_idx, e.shape)
    return GammaFieldReport(ok=worst > 0.0, worst_margin=worst,
                            where=tuple(int(i) for i in idx[:-1]), order=int(idx[-1]) + 1)


def measure_epsilon(omega0, k, lam=None, safety=0.995):
    """Largest eps (shaved by ``safety``) with omega0 - eps*Id and
    Id - eps*omega0 both in Gamma_k at every point, found by bisection."""
    if lam is None:
        lam = eig_field(np.asarray(omega0, dtype=complex))

    def feasible(eps):
        return bool(
            symfun.in_gamma_k(lam - eps, k).all()
            and symfun.in_gamma_k(1.0 - eps * lam, k).all()
        )

    if not feasible(0.0):
        raise ConeError(f"background field not in Gamma_{k}")
    lo, hi = 0.0, 1.0
    for _ in range(70):
        if feasible(hi):
            lo, hi = hi, 2.0 * hi
        else:
            break
    else:
        return safety * lo
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return safety * lo


@dataclass
class ConeConditionReport:
    """Local cone condition for the (k, l) quotient against a forcing field.

    margin(z) = min_j [ sigma_{k-1}(lam|j) - Ft(z) sigma_{l-1}(lam|j) ] with
    Ft = C(n,k)/C(n,l) * exp(F); satisfied iff the global minimum is positive.
    ``margin_field`` carries that pointwise minimum over slots;
    ``delta`` is the measured root gap min_{z,j} [ratio^(1/(k-l)) - Ft^(1/(k-l))]
    (for l = 0 the condition is vacuous and delta is the raw sigma margin).
    """

    satisfied: bool
    worst_margin: float
    where: tuple
    slot: int
    delta: float
    k: int
    l: int
    margin_field: np.ndarray = None

    def __bool__(self):
        return self.satisfied


def check_cone_condition(omega0, F, grid, k, l, lam=None):
    n = grid.n
    if not 0 <= l < k <= n:
        raise ValueError(f"need 0 <= l < k <= n, got k={k}, l={l}, n={n}")
    W = np.asarray(omega0, dtype=complex)
    if lam is None:
        lam = eig_field(W)
    gam = in_gamma_k_field(W, k, lam=lam)
    if not gam.ok:
        raise ConeError(f"background field not in Gamma_{k} (margin {gam.worst_margin:.3e})")
    F = np.broadcast_to(np.asarray(F, dtype=float), grid.shape)
    ft = (math.comb(n, k) / math.comb(n, l)) * np.exp(F)
    sk1 = symfun.sigma_excl_all(lam, k - 1)
    if l == 0:
        margin = sk1
        delta = float(sk1.min())
    else:
        sl1 = symfun.sigma_excl_all(lam, l - 1)
        margin = sk1 - ft[..., None] * sl1
        root = 1.0 / (k - l)
        delta = float(((sk1 / sl1) ** root - ft[..., None] ** root).min())
    worst = float(margin.min())
    idx = np.unravel_index(int(np.argmin(margin)), margin.shape)
    return ConeConditionReport(
        satisfied=worst > 0.0,
        worst_margin=worst,
        where=tuple(int(i) for i in idx[:-1]),
        slot=int(idx[-1]),
        delta=delta,
        k=k,
        l=l,
        margin_field=margin.min(axis=-1),
    )


# ---------------------------------------------------------------------------
# simultaneous diagonalization
# ---------------------------------------------------------------------------


def simultaneous_diagonalize(M1, M2, tol=1e-9):
    """Joint diagonalizing basis for a positive M1 and a hyperhermitian M2.

    Returns (C, d1, d2): C is a quaternionic-structured embedding column
    basis with C^H M1 C = diag(d1 doubled) and C^H M2 C = diag(d2 doubled)
    (d1 is identically one: the basis normalizes M1 to the identity).
    Both off-diagonal residuals are checked against ``tol``.
    """
    M1 = np.asarray(M1, dtype=complex)
    M2 = np.asarray(M2, dtype=complex)
    n = _n_of(M1)
    lam1, V1 = np.linalg.eigh(M1)
    if lam1[0] <= 0:
        raise ConeError(f"first form is not positive definite (min eig {lam1[0]:.3e})")
    S = (V1 * (lam1 ** -0.5)) @ V1.conj().T  # M1^(-1/2), stays quaternionic
    B = S @ M2 @ S
    B = (B + B.conj().T) / 2.0
    from .quaternion import QMatrix, eig as qeig

    lam2, C2 = qeig(QMatrix(B, validate=False))
    C = S @ C2.chi
    r1 = C.conj().T @ M1 @ C
    r2 = C.conj().T @ M2 @ C
    d1 = np.einsum("ii->i", r1).real[:n].copy()
    d2 = np.einsum("ii->i", r2).real[:n].copy()
    err = max(
        float(np.abs(r1 - np.diag(np.einsum("ii->i", r1))).max()),
        float(np.abs(r2 - np.diag(np.einsum("ii->i", r2))).max()),
    )
    if err > tol * (1.0 + float(max(np.abs(M1).max(), np.abs(M2).max()))):
        raise ConeError(f"joint diagonalization failed: off-diagonal residual {err:.3e}")
    return C, d1, d2


def wedge_minor_coeff(lam, i, l):
    """sigma_{i-1} of a diagonalized point value with slot l removed.

    In the diagonal frame this is the coefficient relating
    W^(i-1) ^ Omega^(n-i) ^ (slot-l area element) to (i-1)! (n-i)! Omega^n.
    """
    lam = np.asarray(lam, dtype=float)
    return symfun.sigma_excl(lam, i - 1, l)


def newton_transform_field(W, m, eigh_cache=None):
    """Pointwise m-th Newton transform field (same shape as W)."""
    W = np.asarray(W, dtype=complex)
    n = _n_of(W)
    if n == 1:
        out = np.zeros_like(W)
        if m == 0:
            out[..., 0, 0] = 1.0
            out[..., 1, 1] = 1.0
        return out
    if eigh_cache is None:
        lam, V = chi_eigh(W)
    else:
        lam, V = eigh_cache
    s = symfun.sigma_excl_all(lam, m)
    sdup = np.repeat(s, 2, axis=-1)
    return np.einsum("...ij,...j,...kj->...ik", V, sdup, V.conj())


def gradient_pairing(u, W, i, grid, backend="spectral", grad=None, validate=True):
    """The scalar field  (i-1)! (n-i)! / n! * sum_l m_l sigma_{i-1}(lam(W)|l),

    where m_l is the squared magnitude of the two gradient coefficients of
    direction l in the frame diagonalizing W.  Evaluated invariantly as
    v^H S_{i-1}(W) v; nonnegative whenever W is in Gamma_i pointwise.
    """
    W = np.asarray(W, dtype=complex)
    n = _n_of(W)
    if not 1 <= i <= n:
        raise ValueError(f"need 1 <= i <= n, got i={i}")
    if validate:
        rep = in_gamma_k_field(W, i)
        if not rep.ok:
            raise ConeError(f"field not in Gamma_{i} (margin {rep.worst_margin:.3e})")
    if grad is None:
        grad = gradient_coefficients(u, grid, backend)
    S = newton_transform_field(W, i - 1)
    quad = np.einsum("...p,...pq,...q->...", grad.conj(), S, grad).real
    c = math.factorial(i - 1) * math.factorial(n - i) / math.factorial(n)
    return c * quad


def gradient_alpha_pairing(grad, alpha, W, i):
    """Complex field  (i-1)! (n-i)! / n! * sum_l <v_l, a_l> sigma_{i-1}(W|l),

    the mixed gradient/one-form pairing in the frame diagonalizing W.  The
    inner product couples the two embedding coefficients of each direction.
    """
    W = np.asarray(W, dtype=complex)
    n = _n_of(W)
    S = newton_transform_field(W, i - 1)
    mixed = np.einsum("...p,...pq,...q->...", grad.conj(), S, alpha)
    c = math.factorial(i - 1) * math.factorial(n - i) / math.factorial(n)
    return c * mixed

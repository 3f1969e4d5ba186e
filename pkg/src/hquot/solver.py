"""Damped Newton solver for the quotient equation on the flat torus.

Unknowns are the potential u (mean-zero gauge during iteration) and a real
constant b balancing the torus compatibility constraint:

    sigma_k(W_u) - (C(n,k)/C(n,l)) e^(F + b) sigma_l(W_u) = 0,   W_u = W_0 + H(u).

The equation depends on u only through its second derivatives, so a constant
shift is invisible; without b the discrete system would be overdetermined.
Newton steps solve the bordered linear system

    [ L    g ] [v ]   [-R]
    [ mean 0 ] [db] = [ 0]

with L the second-order coefficient operator obtained by differentiating the
residual through the eigenvalues (Newton transforms), and g the derivative in
b.  L is elliptic exactly while the iterate stays inside Gamma_k, which the
damping enforces: any trial step whose cone margin drops below the safeguard
is rejected and the step halved.  The linear solves use GMRES preconditioned
by the constant-coefficient symbol on the torus, so constant-coefficient
problems converge in a single inner iteration.

Returned potentials are shifted to sup u = 0 (the constant shift changes
neither b nor the residual).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from . import fields as fl
from . import symfun
from .errors import ConeError, ConvergenceError
from .grid import TorusGrid

__all__ = [
    "SolverConfig",
    "SolveResult",
    "Linearization",
    "build_problem",
    "residual",
    "linearize",
    "normalize_sup",
    "solve",
]

_SAFE_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "tanh": np.tanh, "abs": np.abs, "pi": np.pi,
}


@dataclass
class SolverConfig:
    """Problem + iteration parameters.

    F and the optional diagonal background entries are numpy expressions in
    the grid coordinates x0..x{4n-1} (inactive coordinates evaluate to 0.0).
    """

    n: int
    k: int
    l: int
    points_per_axis: int
    active_axes: tuple
    F: str = "0.0"
    omega0_diag: tuple | None = None  # n expressions; None = identity
    tolerance: float = 1e-9
    max_iterations: int = 30
    initial_step: float = 1.0
    backtrack_factor: float = 0.5
    cone_margin: float = 1e-10
    backend: str = "spectral"
    seed: int = 20240601
    linear_rtol: float = 1e-12
    linear_maxiter: int = 400

    def __post_init__(self):
        if not 0 <= self.l < self.k <= self.n:
            raise ValueError(f"need 0 <= l < k <= n, got k={self.k}, l={self.l}, n={self.n}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.backend not in ("spectral", "fd"):
            raise ValueError(f"unknown backend {self.backend!r}")
        self.active_axes = tuple(int(a) for a in self.active_axes)

    @property
    def grid(self):
        return TorusGrid(self.n, self.active_axes, self.points_per_axis)

    def to_dict(self):
        d = dict(self.__dict__)
        d["active_axes"] = list(self.active_axes)
        d["omega0_diag"] = list(self.omega0_diag) if self.omega0_diag else None
        return d

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "grid" in data:
            g = data.pop("grid")
            data["points_per_axis"] = g["N"]
            data["active_axes"] = tuple(g["active_axes"])
        if data.get("omega0_diag"):
            data["omega0_diag"] = tuple(data["omega0_diag"])
        allowed = set(cls.__dataclass_fields__)
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def evaluate_expression(expr, grid):
    """Evaluate a coordinate expression to a full scalar field."""
    ns = dict(_SAFE_FUNCS)
    ns.update(grid.coordinates())
    try:
        val = eval(expr, {"__builtins__": {}}, ns)  # trusted config input
    except Exception as exc:
        raise ValueError(f"cannot evaluate expression {expr!r}: {exc}") from None
    out = np.asarray(val, dtype=float)
    return np.broadcast_to(out, grid.shape).copy()


def build_problem(cfg):
    """(grid, omega0 field, F field) from a config."""
    grid = cfg.grid
    F = evaluate_expression(cfg.F, grid)
    if cfg.omega0_diag is None:
        omega0 = fl.identity_form(grid)
    else:
        if len(cfg.omega0_diag) != cfg.n:
            raise ValueError(f"omega0_diag needs {cfg.n} entries")
        omega0 = np.zeros(grid.shape + (2 * cfg.n, 2 * cfg.n), dtype=complex)
        for a, expr in enumerate(cfg.omega0_diag):
            d = evaluate_expression(expr, grid)
            omega0[..., a, a] = d
            omega0[..., cfg.n + a, cfg.n + a] = d
    return grid, omega0, F


@dataclass
class SolveResult:
    u: np.ndarray
    b: float
    iterations: int
    residual_history: list
    converged: bool
    gamma_margin: float
    cone_report: object
    warnings: list = field(default_factory=list)

    def summary(self):
        return {
            "b": self.b,
            "iterations": self.iterations,
            "residual_history": [float(r) for r in self.residual_history],
            "final_residual": float(self.residual_history[-1]),
            "converged": self.converged,
            "gamma_margin": self.gamma_margin,
            "sup_u": float(self.u.max()),
            "osc_u": float(self.u.max() - self.u.min()),
            "cone_condition": {
                "satisfied": bool(self.cone_report.satisfied),
                "worst_margin": self.cone_report.worst_margin,
                "delta": self.cone_report.delta,
            },
            "warnings": list(self.warnings),
        }


def _quotient_factor(n, k, l):
    return math.comb(n, k) / math.comb(n, l)


def residual(u, b, omega0, F, grid, k, l, backend="spectral", W=None, lam=None):
    """Pointwise sigma_k(W_u) - (C(n,k)/C(n,l)) e^(F+b) sigma_l(W_u)."""
    if W is None:
        W = fl.omega_u(omega0, u, 1.0, grid, backend)
    if lam is None:
        lam = fl.eig_field(W)
    coef = _quotient_factor(grid.n, k, l)
    E = coef * np.exp(np.asarray(F, dtype=float) + b)
    sk = symfun.sigma(lam, k)
    sl = symfun.sigma(lam, l) if l > 0 else 1.0
    return sk - E * sl


class Linearization:
    """Derivative of the residual at (u, b) as a bordered linear operator.

    apply(v) implements the second-order part L[v] = sum c_PQ(z) v_,PQ built
    from the Newton transforms of W_u; b_column is dR/db.  ellipticity_margin
    is the minimum spectral weight of the transform combination; it must be
    positive (it is, inside Gamma_k when the quotient factor tracks the
    equation) or the operator has lost ellipticity.
    """

    def __init__(self, grid, backend, coeff, b_column, ellipticity_margin):
        self.grid = grid
        self.backend = backend
        self.coeff = coeff  # dict (P, Q) ordered active-axis pairs -> field
        self.b_column = b_column
        self.ellipticity_margin = ellipticity_margin

    def apply(self, v):
        from .grid import second_derivative

        out = np.zeros_like(v)
        for (P, Q), c in self.coeff.items():
            out += c * second_derivative(v, self.grid, P, Q, self.backend)
        return out

    def matvec(self, v, db):
        return self.apply(v) + self.b_column * db

    # -- assembled constant-coefficient symbol for preconditioning ----------

    def mean_symbol(self):
        """Fourier symbol of the spatial-mean coefficient operator."""
        grid = self.grid
        sym = np.zeros(grid.shape)
        for (P, Q), c in self.coeff.items():
            cbar = float(np.mean(c))
            pp, qq = grid.axis_position(P), grid.axis_position(Q)
            if self.backend == "spectral":
                if P == Q:
                    sym = sym - cbar * grid.wavenumbers(pp) ** 2
                else:
                    sym = sym - cbar * (
                        grid.wavenumbers(pp, zero_nyquist=True)
                        * grid.wavenumbers(qq, zero_nyquist=True)
                    )
            else:
                h = grid.spacing
                if P == Q:
                    kk = grid.wavenumbers(pp) * h
                    sym = sym - cbar * (2.0 - 2.0 * np.cos(kk)) / h**2
                else:
                    kp = grid.wavenumbers(pp, zero_nyquist=True) * h
                    kq = grid.wavenumbers(qq, zero_nyquist=True) * h
                    sym = sym - cbar * np.sin(kp) * np.sin(kq) / h**2
        return sym


def linearize(u, b, omega0, F, grid, k, l, backend="spectral", W=None, eigh_cache=None):
    n = grid.n
    if W is None:
        W = fl.omega_u(omega0, u, 1.0, grid, backend)
    coef = _quotient_factor(n, k, l)
    E = coef * np.exp(np.asarray(F, dtype=float) + b)

    if n == 1:
        lam = fl.eig_field(W)
        sk1 = symfun.sigma_excl_all(lam, k - 1)
        sl1 = symfun.sigma_excl_all(lam, l - 1)
        weights = sk1 - E[..., None] * sl1
        Gx = weights[..., 0].astype(complex)[..., None, None] * np.eye(1)
        Gy = np.zeros_like(Gx)
        lam_for_sig = lam
    else:
        if eigh_cache is None:
            from .quaternion import chi_eigh

            eigh_cache = chi_eigh(W)
        lam_for_sig, V = eigh_cache
        Sk = fl.newton_transform_field(W, k - 1, eigh_cache)
        G = Sk if l == 0 else Sk - E[..., None, None] * fl.newton_transform_field(W, l - 1, eigh_cache)
        Gx = G[..., :n, :n]
        Gy = G[..., :n, n:]
        weights = symfun.sigma_excl_all(lam_for_sig, k - 1)
        if l > 0:
            weights = weights - E[..., None] * symfun.sigma_excl_all(lam_for_sig, l - 1)

    ell = float(weights.min())
    if ell <= 0:
        raise ConeError(f"linearized operator lost ellipticity (min weight {ell:.3e})")

    # c'_{PQ} = 1/2 Re(G_{ab} T_{cd}) with b,c from P and a,d from Q; folded
    # over unordered pairs.
    ordered = {}
    for P in grid.active_axes:
        bq, c = divmod(P, 4)
        for Q in grid.active_axes:
            aq, d = divmod(Q, 4)
            tx, ty = fl._TABLE[c][d]
            gx = Gx[..., aq, bq]
            gy = Gy[..., aq, bq]
            w = 0.5 * (gx * tx - gy * np.conj(ty)).real
            if np.abs(w).max() > 0:
                ordered[(P, Q)] = w
    coeff = {}
    for (P, Q), w in ordered.items():
        key = (P, Q) if P <= Q else (Q, P)
        coeff[key] = coeff.get(key, 0.0) + w

    sl = symfun.sigma(lam_for_sig, l) if l > 0 else 1.0
    b_column = -E * sl
    return Linearization(grid, backend, coeff, b_column, ell)


def normalize_sup(u):
    """Shift so the maximum is zero; idempotent, exact for constants."""
    u = np.asarray(u, dtype=float)
    return u - u.max()


def _solve_newton_step(lin, R, cfg):
    grid = lin.grid
    m = R.size
    shape = R.shape
    g = lin.b_column
    gbar = float(np.mean(g))
    sym = lin.mean_symbol()
    sym_flat = sym.ravel()
    zero = np.abs(sym_flat) < 1e-300
    inv_sym = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, sym_flat)).reshape(shape)

    def matvec(z):
        v = z[:m].reshape(shape)
        db = z[m]
        top = lin.matvec(v, db)
        return np.concatenate([top.ravel(), [v.mean()]])

    def precond(z):
        r = z[:m].reshape(shape)
        rho = z[m]
        db = float(r.mean()) / gbar
        rhat = np.fft.fftn(r)
        rhat.flat[0] = 0.0  # mean component is carried by db
        v = np.fft.ifftn(rhat * inv_sym).real + rho
        return np.concatenate([v.ravel(), [db]])

    A = LinearOperator((m + 1, m + 1), matvec=matvec, dtype=float)
    M = LinearOperator((m + 1, m + 1), matvec=precond, dtype=float)
    rhs = np.concatenate([(-R).ravel(), [0.0]])
    sol, info = gmres(A, rhs, M=M, rtol=cfg.linear_rtol, atol=1e-14 * max(1.0, np.abs(rhs).max()),
                      restart=80, maxiter=cfg.linear_maxiter)
    if info != 0:
        raise ConvergenceError(f"inner linear solve did not converge (gmres info {info})")
    v = sol[:m].reshape(shape)
    v = v - v.mean()
    return v, float(sol[m])


def solve(cfg):
    """Run the damped Newton iteration; returns a SolveResult with sup u = 0."""
    grid, omega0, F = build_problem(cfg)
    n, k, l = cfg.n, cfg.k, cfg.l
    backend = cfg.backend

    lam0 = fl.eig_field(omega0)
    gam0 = fl.in_gamma_k_field(omega0, k, lam=lam0)
    if not gam0.ok:
        raise ConeError(
            f"background field not in Gamma_{k} (margin {gam0.worst_margin:.3e})"
        )

    warnings = []
    u = np.zeros(grid.shape)
    b = -float(np.mean(F))
    pre_cone = fl.check_cone_condition(omega0, F, grid, k, l, lam=lam0)
    if not pre_cone.satisfied:
        warnings.append(
            f"cone condition violated for the configured forcing "
            f"(margin {pre_cone.worst_margin:.3e}); the iteration may still converge"
        )

    W = fl.omega_u(omega0, u, 1.0, grid, backend)
    lam = fl.eig_field(W)
    R = residual(u, b, omega0, F, grid, k, l, backend, W=W, lam=lam)
    hist = [float(np.abs(R).max())]
    iterations = 0

    for it in range(1, cfg.max_iterations + 1):
        if hist[-1] <= cfg.tolerance:
            break
        eigh_cache = None
        if n > 1:
            from .quaternion import chi_eigh

            eigh_cache = chi_eigh(W)
        try:
            lin = linearize(u, b, omega0, F, grid, k, l, backend, W=W, eigh_cache=eigh_cache)
        except ConeError as exc:
            note = f" [{'; '.join(warnings)}]" if warnings else ""
            raise ConvergenceError(
                f"aborted at iteration {it}: {exc}{note}"
            ) from exc
        v, db = _solve_newton_step(lin, R, cfg)

        step = cfg.initial_step
        accepted = False
        while step >= 1e-12:
            u_try = u + step * v
            u_try -= u_try.mean()
            b_try = b + step * db
            W_try = fl.omega_u(omega0, u_try, 1.0, grid, backend)
            lam_try = fl.eig_field(W_try)
            margin = symfun.gamma_margin(lam_try, k)
            if np.min(margin) <= cfg.cone_margin:
                step *= cfg.backtrack_factor
                continue
            R_try = residual(u_try, b_try, omega0, F, grid, k, l, backend,
                             W=W_try, lam=lam_try)
            r_try = float(np.abs(R_try).max())
            if r_try < (1.0 - 1e-4 * step) * hist[-1] or r_try <= cfg.tolerance:
                u, b, W, lam, R = u_try, b_try, W_try, lam_try, R_try
                hist.append(r_try)
                accepted = True
                break
            step *= cfg.backtrack_factor
        if not accepted:
            raise ConvergenceError(
                f"damping underflow at iteration {it} (residual {hist[-1]:.3e})"
            )
        iterations = it
    else:
        raise ConvergenceError(
            f"no convergence in {cfg.max_iterations} iterations "
            f"(residual {hist[-1]:.3e})"
        )

    u_out = normalize_sup(u)
    gam = fl.in_gamma_k_field(W, k, lam=lam)
    post_cone = fl.check_cone_condition(omega0, F + b, grid, k, l, lam=lam0)
    if not post_cone.satisfied:
        warnings.append(
            f"cone condition violated at the solved normalization "
            f"(margin {post_cone.worst_margin:.3e})"
        )
    return SolveResult(
        u=u_out,
        b=b,
        iterations=iterations,
        residual_history=hist,
        converged=True,
        gamma_margin=gam.worst_margin,
        cone_report=post_cone,
        warnings=warnings,
    )

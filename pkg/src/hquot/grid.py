"""Discrete period-1 torus grids and periodic differentiation.

Fields live on the flat torus with 4n real coordinates (coordinate 4a+c is
the c-th real component of the a-th quaternionic coordinate).  Only the axes
listed in ``active_axes`` are discretized; fields are constant along the
rest, so derivatives there vanish.  A scalar field is a plain ndarray of
shape ``grid.shape``; form fields carry trailing matrix axes.

Two derivative backends are provided: "spectral" (FFT, exact on band-limited
data) and "fd" (second-order central differences).  They are independent
implementations and cross-validate each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TorusGrid",
    "first_derivative",
    "second_derivative",
    "integrate",
    "save_scalar_field",
    "load_scalar_field",
    "save_form_field",
    "load_form_field",
]

BACKENDS = ("spectral", "fd")


@dataclass(frozen=True)
class TorusGrid:
    """Equispaced grid on the period-1 torus.

    n: quaternionic dimension (4n real coordinates available).
    active_axes: which real coordinates the fields vary along (at most 4;
        the matrix algebra still runs at full n).
    points_per_axis: N points per active axis, spacing 1/N; N even, >= 4.
    """

    n: int
    active_axes: tuple
    points_per_axis: int

    def __post_init__(self):
        axes = tuple(int(a) for a in self.active_axes)
        object.__setattr__(self, "active_axes", axes)
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 1 <= len(axes) <= 4:
            raise ValueError("between 1 and 4 active axes are supported")
        if len(set(axes)) != len(axes) or sorted(axes) != list(axes):
            raise ValueError("active_axes must be strictly increasing")
        if not all(0 <= a < 4 * self.n for a in axes):
            raise ValueError(f"axes must lie in [0, {4 * self.n})")
        N = self.points_per_axis
        if N < 4 or N % 2:
            raise ValueError("points_per_axis must be even and >= 4")

    @property
    def dim(self):
        return len(self.active_axes)

    @property
    def shape(self):
        return (self.points_per_axis,) * self.dim

    @property
    def spacing(self):
        return 1.0 / self.points_per_axis

    @property
    def num_points(self):
        return self.points_per_axis ** self.dim

    def axis_position(self, axis):
        """Array axis carrying real coordinate ``axis``; None if inactive."""
        try:
            return self.active_axes.index(axis)
        except ValueError:
            return None

    def coordinate(self, axis):
        """Grid values of one real coordinate, broadcastable to grid.shape."""
        pos = self.axis_position(axis)
        if pos is None:
            return 0.0
        x = np.arange(self.points_per_axis) / self.points_per_axis
        shape = [1] * self.dim
        shape[pos] = self.points_per_axis
        return x.reshape(shape)

    def coordinates(self):
        """{'x0': array_or_0.0, ...} for every real coordinate."""
        return {f"x{a}": self.coordinate(a) for a in range(4 * self.n)}

    def wavenumbers(self, pos, zero_nyquist=False):
        """Angular wavenumbers along array axis ``pos``, broadcast-shaped."""
        N = self.points_per_axis
        k = 2.0 * np.pi * np.fft.fftfreq(N, d=1.0 / N)
        if zero_nyquist:
            k = k.copy()
            k[N // 2] = 0.0
        shape = [1] * self.dim
        shape[pos] = N
        return k.reshape(shape)


def _check_backend(backend):
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")


def first_derivative(u, grid, axis, backend="spectral"):
    """d/dx_axis of a periodic scalar field; zero for inactive axes."""
    _check_backend(backend)
    u = np.asarray(u, dtype=float)
    pos = grid.axis_position(axis)
    if pos is None:
        return np.zeros_like(u)
    if backend == "fd":
        h = grid.spacing
        return (np.roll(u, -1, axis=pos) - np.roll(u, 1, axis=pos)) / (2.0 * h)
    U = np.fft.fft(u, axis=pos)
    U *= 1j * grid.wavenumbers(pos, zero_nyquist=True)
    return np.fft.ifft(U, axis=pos).real


def second_derivative(u, grid, axis_p, axis_q, backend="spectral"):
    """Mixed second partial d2/dx_p dx_q; symmetric in its axes by construction."""
    _check_backend(backend)
    u = np.asarray(u, dtype=float)
    pp, qq = grid.axis_position(axis_p), grid.axis_position(axis_q)
    if pp is None or qq is None:
        return np.zeros_like(u)
    if axis_p == axis_q:
        if backend == "fd":
            h = grid.spacing
            return (np.roll(u, -1, axis=pp) - 2.0 * u + np.roll(u, 1, axis=pp)) / h**2
        U = np.fft.fft(u, axis=pp)
        U *= -(grid.wavenumbers(pp) ** 2)
        return np.fft.ifft(U, axis=pp).real
    lo, hi = min(axis_p, axis_q), max(axis_p, axis_q)
    return first_derivative(first_derivative(u, grid, lo, backend), grid, hi, backend)


def integrate(f, grid):
    """Integral over the unit-volume torus: the grid mean (midpoint rule,
    which coincides with the trapezoidal rule on periodic data and is exact
    for band-limited fields)."""
    return float(np.asarray(f, dtype=float).mean())


# ---------------------------------------------------------------------------
# field snapshots
# ---------------------------------------------------------------------------
#
# Text format, one point per line in row-major (C) order, values as
# shortest-roundtrip decimal (exact on reload).  Scalar fields carry one
# value per line; form fields carry the n*n quaternion entries of the point
# matrix as 4*n*n values in (row, column, [w x y z]) order.


def _header(kind, grid):
    axes = ",".join(str(a) for a in grid.active_axes)
    return (
        f"# hquot {kind} field v1\n"
        f"# n={grid.n} N={grid.points_per_axis} axes={axes}\n"
    )


def _parse_header(lines, kind):
    if len(lines) < 2 or lines[0].strip() != f"# hquot {kind} field v1":
        raise ValueError(f"not a {kind} field file")
    meta = {}
    for tok in lines[1].lstrip("#").split():
        key, _, val = tok.partition("=")
        meta[key] = val
    grid = TorusGrid(
        n=int(meta["n"]),
        active_axes=tuple(int(a) for a in meta["axes"].split(",")),
        points_per_axis=int(meta["N"]),
    )
    return grid


def save_scalar_field(path, u, grid):
    u = np.asarray(u, dtype=float)
    if u.shape != grid.shape:
        raise ValueError(f"field shape {u.shape} does not match grid {grid.shape}")
    with open(path, "w") as fh:
        fh.write(_header("scalar", grid))
        for v in u.ravel(order="C"):
            fh.write(repr(float(v)) + "\n")


def load_scalar_field(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    grid = _parse_header(lines, "scalar")
    vals = np.array([float(s) for s in lines[2:] if s.strip()], dtype=float)
    if vals.size != grid.num_points:
        raise ValueError(f"expected {grid.num_points} values, found {vals.size}")
    return vals.reshape(grid.shape), grid


def save_form_field(path, W, grid):
    """W is the stacked embedding field, shape grid.shape + (2n, 2n)."""
    W = np.asarray(W, dtype=complex)
    n = grid.n
    if W.shape != grid.shape + (2 * n, 2 * n):
        raise ValueError("form field shape does not match grid")
    X = W[..., :n, :n]
    Y = W[..., :n, n:]
    comp = np.stack([X.real, X.imag, Y.real, Y.imag], axis=-1)  # (..., n, n, 4)
    flat = comp.reshape(-1, 4 * n * n)
    with open(path, "w") as fh:
        fh.write(_header("form", grid))
        for row in flat:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_form_field(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    grid = _parse_header(lines, "form")
    n = grid.n
    rows = [[float(v) for v in s.split()] for s in lines[2:] if s.strip()]
    flat = np.array(rows, dtype=float)
    if flat.size == 0:
        flat = flat.reshape(0, 4 * n * n)
    if flat.shape != (grid.num_points, 4 * n * n):
        raise ValueError(
            f"expected {grid.num_points} x {4 * n * n} values, found {flat.shape}"
        )
    comp = flat.reshape(grid.shape + (n, n, 4))
    X = comp[..., 0] + 1j * comp[..., 1]
    Y = comp[..., 2] + 1j * comp[..., 3]
    W = np.zeros(grid.shape + (2 * n, 2 * n), dtype=complex)
    W[..., :n, :n] = X
    W[..., :n, n:] = Y
    W[..., n:, :n] = -Y.conj()
    W[..., n:, n:] = X.conj()
    return W, grid

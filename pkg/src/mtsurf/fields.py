"""Lazily evaluated fields on a lattice, with composable difference operators.

A field is a memoized function of an integer offset (i, j): ``field.at(i, j)``
returns its values at every base point shifted by (i * ex, j * ey).  Derivatives
are new fields built from a first-derivative stencil, so nested derivatives are
just compositions and every intermediate evaluation is cached.

Two lattices exist:

* ``GridLattice`` holds tabulated data on the full grid; shifting is an index
  shift (wrapping on periodic axes, clamped otherwise) and the stencil is the
  second-order central difference with the grid spacing.
* ``PointLattice`` holds arbitrary base points and evaluates callables at
  shifted points; it uses a sixth-order central stencil with a small step, which
  is how derived quantities of closed-form surfaces are differentiated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

CENTRAL2 = ((-1, -0.5), (1, 0.5))
CENTRAL6 = (
    (-3, -1.0 / 60), (-2, 3.0 / 20), (-1, -3.0 / 4),
    (1, 3.0 / 4), (2, -3.0 / 20), (3, 1.0 / 60),
)

ANALYTIC_STEP = 0.01


@dataclass(frozen=True)
class GridSpec:
    """Rectangular coordinate grid for z = x + iy.

    Nodes on a periodic axis sit at x0 + k*hx.  Nodes on a non-periodic axis are
    cell centred, x0 + (k + 1/2)*hx, so that the midpoint rule integrates to
    second order over the full extent.
    """

    shape: tuple[int, int] = (64, 64)
    origin: tuple[float, float] = (0.0, 0.0)
    extent: tuple[float, float] = (2 * np.pi, 2 * np.pi)
    periodic: tuple[bool, bool] = (True, True)

    def __post_init__(self):
        nx, ny = self.shape
        if nx < 1 or ny < 1 or self.extent[0] <= 0 or self.extent[1] <= 0:
            from .errors import DomainError

            raise DomainError(f"invalid grid {self.shape} / {self.extent}")

    @property
    def spacing(self) -> tuple[float, float]:
        return (self.extent[0] / self.shape[0], self.extent[1] / self.shape[1])

    def axis(self, k: int) -> np.ndarray:
        n = self.shape[k]
        h = self.spacing[k]
        shift = 0.0 if self.periodic[k] else 0.5
        return self.origin[k] + (np.arange(n) + shift) * h

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays of shape (nx, ny); axis 0 is x."""
        return np.meshgrid(self.axis(0), self.axis(1), indexing="ij")

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec((self.shape[0] * factor, self.shape[1] * factor),
                        self.origin, self.extent, self.periodic)

    def with_shape(self, shape) -> "GridSpec":
        return GridSpec(tuple(shape), self.origin, self.extent, self.periodic)

    def opened(self) -> "GridSpec":
        """Same nodes, with every axis treated as non-periodic."""
        origin = tuple(o - (0.5 * h if p else 0.0)
                       for o, h, p in zip(self.origin, self.spacing, self.periodic))
        return GridSpec(self.shape, origin, self.extent, (False, False))

    def quadrature_weight(self) -> float:
        hx, hy = self.spacing
        return hx * hy

    def interior_mask(self, margin: int) -> np.ndarray:
        """Boolean mask dropping ``margin`` cells next to non-periodic edges."""
        mask = np.ones(self.shape, dtype=bool)
        for k in range(2):
            if self.periodic[k] or margin <= 0:
                continue
            sl = [slice(None), slice(None)]
            sl[k] = slice(0, margin)
            mask[tuple(sl)] = False
            sl[k] = slice(self.shape[k] - margin, None)
            mask[tuple(sl)] = False
        return mask


class Field:
    __slots__ = ("lattice", "_fn", "_cache", "reach")

    def __init__(self, lattice: "Lattice", fn: Callable[[int, int], np.ndarray], reach: int = 0):
        self.lattice = lattice
        self._fn = fn
        self._cache: dict = {}
        self.reach = reach

    def at(self, i: int = 0, j: int = 0) -> np.ndarray:
        key = (i, j)
        try:
            return self._cache[key]
        except KeyError:
            val = self._fn(i, j)
            self._cache[key] = val
            return val

    @property
    def value(self) -> np.ndarray:
        return self.at(0, 0)

    def map(self, fn, *others) -> "Field":
        return self.lattice.map(fn, self, *others)

    # a little arithmetic keeps pipeline code readable
    def _bin(self, other, op):
        if isinstance(other, Field):
            return self.lattice.map(op, self, other)
        return self.lattice.map(lambda a: op(a, other), self)

    def __add__(self, o):
        return self._bin(o, np.add)

    def __radd__(self, o):
        return self._bin(o, np.add)

    def __sub__(self, o):
        return self._bin(o, np.subtract)

    def __rsub__(self, o):
        return self._bin(o, lambda a, b: b - a)

    def __mul__(self, o):
        return self._bin(o, np.multiply)

    def __rmul__(self, o):
        return self._bin(o, np.multiply)

    def __truediv__(self, o):
        return self._bin(o, np.true_divide)

    def __neg__(self):
        return self.lattice.map(np.negative, self)

    def conj(self) -> "Field":
        return self.lattice.map(np.conjugate, self)


def _lagrange(nodes, m, x):
    """Weight of node ``m`` in the interpolating polynomial through ``nodes``, at x."""
    w = np.ones_like(x)
    for j in nodes:
        if j != m:
            w = w * (x - j) / (nodes[m] - j)
    return w


class Lattice:
    stencil: tuple = CENTRAL2
    step: tuple[float, float] = (1.0, 1.0)

    @property
    def radius(self) -> int:
        return max(abs(k) for k, _ in self.stencil)

    def map(self, fn, *fields: Field) -> Field:
        reach = max((f.reach for f in fields), default=0)
        return Field(self, lambda i, j: fn(*(f.at(i, j) for f in fields)), reach)

    def constant(self, value) -> Field:
        value = np.asarray(value)
        return Field(self, lambda i, j: value)

    def dx(self, F: Field) -> Field:
        ex = self.step[0]
        st = self.stencil
        return Field(self, lambda i, j: sum(c * F.at(i + k, j) for k, c in st) / ex,
                     F.reach + self.radius)

    def dy(self, F: Field) -> Field:
        ey = self.step[1]
        st = self.stencil
        return Field(self, lambda i, j: sum(c * F.at(i, j + k) for k, c in st) / ey,
                     F.reach + self.radius)

    def dz(self, F: Field) -> Field:
        """d/dz = (d/dx - i d/dy) / 2."""
        Fx, Fy = self.dx(F), self.dy(F)
        return self.map(lambda a, b: 0.5 * (a - 1j * b), Fx, Fy)

    def dzb(self, F: Field) -> Field:
        """d/dzbar = (d/dx + i d/dy) / 2."""
        Fx, Fy = self.dx(F), self.dy(F)
        return self.map(lambda a, b: 0.5 * (a + 1j * b), Fx, Fy)

    def dz_dzb(self, F: Field) -> tuple[Field, Field]:
        Fx, Fy = self.dx(F), self.dy(F)
        return (self.map(lambda a, b: 0.5 * (a - 1j * b), Fx, Fy),
                self.map(lambda a, b: 0.5 * (a + 1j * b), Fx, Fy))


class GridLattice(Lattice):
    """Tabulated values on a full grid, second-order central differences.

    Shifts wrap on periodic axes.  Beyond a non-periodic edge the data are
    continued by the cubic through the four nodes nearest the edge, so the
    central stencils stay second order up to the edge node.
    """

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.step = grid.spacing
        self.stencil = CENTRAL2
        self._index_cache: dict = {}

    def _index(self, axis: int, k: int):
        key = (axis, k)
        hit = self._index_cache.get(key)
        if hit is None:
            n = self.grid.shape[axis]
            idx = np.arange(n) + k
            if self.grid.periodic[axis]:
                hit = (idx % n, None, None, None)
            else:
                lo, hi = idx < 0, idx > n - 1
                out = lo | hi
                # local coordinate: edge node at 0, interior at 1, 2, 3
                local = np.where(lo, idx, np.where(hi, n - 1 - idx, 0)).astype(float)
                nodes_local = np.arange(min(4, n))
                weights = np.array([_lagrange(nodes_local, m, local) for m in range(len(nodes_local))])
                nodes = np.array([np.where(hi, n - 1 - m, m) for m in nodes_local])
                hit = (np.clip(idx, 0, n - 1), out if out.any() else None, nodes, weights)
            self._index_cache[key] = hit
        return hit

    def _shift_axis(self, arr, axis, k):
        idx, out, nodes, weights = self._index(axis, k)
        res = np.take(arr, idx, axis=axis)
        if out is not None:
            shape = [1] * arr.ndim
            shape[axis] = -1
            ghost = sum(w.reshape(shape) * np.take(arr, nd, axis=axis) for nd, w in zip(nodes, weights))
            res = np.where(out.reshape(shape), ghost, res)
        return res

    def shift(self, arr: np.ndarray, i: int, j: int) -> np.ndarray:
        out = arr
        if i:
            out = self._shift_axis(out, 0, i)
        if j:
            out = self._shift_axis(out, 1, j)
        return out

    def table(self, arr) -> Field:
        arr = np.asarray(arr)
        return Field(self, lambda i, j: self.shift(arr, i, j))


class PointLattice(Lattice):
    """Arbitrary base points; fields come from callables of (x, y)."""

    def __init__(self, x: np.ndarray, y: np.ndarray, step: float = ANALYTIC_STEP):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.step = (step, step)
        self.stencil = CENTRAL6

    def sample(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Field:
        e = self.step[0]
        return Field(self, lambda i, j: fn(self.x + i * e, self.y + j * e))


class FrameLattice(GridLattice):
    """Grid lattice for fields given in frame components.

    A 5-vector field v stands for F v, where the frames satisfy F_z = F A; its
    derivatives carry the connection, d/dx (F v) = F (v_x + (A + B) v).  Scalars
    and matrix-valued tables are differenced as they are.  Frame components stay
    bounded even where the frames themselves grow exponentially.
    """

    def __init__(self, grid: GridSpec, A):
        super().__init__(grid)
        A = np.asarray(A, dtype=complex)
        B = np.conj(A)
        self._conn = (self.table(np.real(A + B)), self.table(np.real(1j * (A - B))))

    def _covariant(self, D: Field, F: Field, axis: int) -> Field:
        M = self._conn[axis]

        def fn(i, j):
            d = D.at(i, j)
            v = F.at(i, j)
            if v.ndim == len(self.grid.shape) + 1 and v.shape[-1] == 5:
                return d + (M.at(i, j) @ v[..., None])[..., 0]
            return d
        return Field(self, fn, D.reach)

    def dx(self, F: Field) -> Field:
        return self._covariant(super().dx(F), F, 0)

    def dy(self, F: Field) -> Field:
        return self._covariant(super().dy(F), F, 1)

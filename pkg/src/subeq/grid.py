"""Rectangular lattices, grid functions and centered-difference jets."""

from __future__ import annotations

import io
import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import framed_jet
from .jets import Jet2


class GridError(ValueError):
    pass


class Grid:
    """Uniform lattice on ``[lo, hi]`` with ``counts[i]`` nodes along axis ``i``.

    Interior nodes are those with ``rho < 0`` that are not on the box edge,
    so every interior node has its full 3^n stencil.  Boundary nodes are
    non-interior nodes touching an interior node.
    """

    def __init__(self, lo, hi, counts, domain=None, metric=None):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.counts = tuple(int(c) for c in np.atleast_1d(counts))
        self.n = len(self.counts)
        if self.lo.shape != (self.n,) or self.hi.shape != (self.n,):
            raise GridError("lo, hi and counts must have the same length")
        if any(c < 3 for c in self.counts):
            raise GridError("need at least 3 nodes per axis")
        if np.any(self.hi <= self.lo):
            raise GridError("empty box")
        if metric is not None and not (metric.in_box(self.lo) and metric.in_box(self.hi)):
            raise GridError(f"grid box leaves the chart {metric.name}")
        self.h = (self.hi - self.lo) / (np.array(self.counts) - 1)
        self.domain = domain
        self.shape = self.counts
        self.size = int(np.prod(self.counts))
        self.strides = np.array([int(np.prod(self.counts[i + 1:])) for i in range(self.n)], dtype=np.int64)
        self._build_masks()

    # coordinates -------------------------------------------------------
    def axes(self):
        return [self.lo[i] + self.h[i] * np.arange(self.counts[i]) for i in range(self.n)]

    def coords(self):
        """Array of shape ``counts + (n,)`` with node coordinates."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def point(self, idx):
        idx = np.unravel_index(idx, self.counts) if np.isscalar(idx) else idx
        return self.lo + self.h * np.asarray(idx, dtype=float)

    def _build_masks(self):
        X = self.coords().reshape(-1, self.n)
        edge = np.zeros(self.counts, dtype=bool)
        for i in range(self.n):
            sl = [slice(None)] * self.n
            sl[i] = 0
            edge[tuple(sl)] = True
            sl[i] = -1
            edge[tuple(sl)] = True
        if self.domain is None:
            inside = np.ones(self.counts, dtype=bool)
        else:
            inside = np.array([self.domain(x) < 0 for x in X]).reshape(self.counts)
        interior = inside & ~edge
        near = np.zeros(self.counts, dtype=bool)
        pad = np.pad(interior, 1)
        for off in itertools.product((-1, 0, 1), repeat=self.n):
            sl = tuple(slice(1 + o, 1 + o + c) for o, c in zip(off, self.counts))
            near |= pad[sl]
        self.interior = interior
        self.boundary = near & ~interior
        self.active = interior | self.boundary

    def interior_nodes(self):
        """Flat indices of interior nodes in lexicographic (row-major) order."""
        return np.flatnonzero(self.interior.ravel()).astype(np.int64)

    def neighbor_table(self, nodes=None):
        """Per node: ``+e_i, -e_i`` for each axis, then ``++, +-, -+, --`` per pair ``i < j``."""
        nodes = self.interior_nodes() if nodes is None else nodes
        s = self.strides
        cols = []
        for i in range(self.n):
            cols += [nodes + s[i], nodes - s[i]]
        for i in range(self.n):
            for j in range(i + 1, self.n):
                cols += [nodes + s[i] + s[j], nodes + s[i] - s[j],
                         nodes - s[i] + s[j], nodes - s[i] - s[j]]
        return np.ascontiguousarray(np.stack(cols, axis=1), dtype=np.int64)

    def describe(self):
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist(), "counts": list(self.counts)}


@dataclass
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.counts)
        if not np.all(np.isfinite(self.values[self.grid.active])):
            raise GridError("grid function has non-finite values on active nodes")

    @classmethod
    def from_callable(cls, grid, f):
        X = grid.coords().reshape(-1, grid.n)
        vals = np.array([f(x) for x in X], dtype=float)
        return cls(grid, vals)

    @property
    def flat(self):
        return self.values.reshape(-1)

    def copy(self):
        return GridFunction(self.grid, self.values.copy())

    def __add__(self, other):
        if isinstance(other, GridFunction):
            return GridFunction(self.grid, self.values + other.values)
        return GridFunction(self.grid, self.values + other)

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __sub__(self, other):
        return self + (-other)

    # CSV ----------------------------------------------------------------
    def to_csv(self, path=None):
        """Header ``dims,h,origin``, one row with those fields, then row-major values."""
        g = self.grid
        buf = io.StringIO()
        buf.write("dims,h,origin\n")
        buf.write(",".join([" ".join(str(c) for c in g.counts),
                            " ".join(repr(float(v)) for v in g.h),
                            " ".join(repr(float(v)) for v in g.lo)]) + "\n")
        for v in self.flat:
            buf.write(repr(float(v)) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source, domain=None, metric=None):
        text = source
        if "\n" not in source:
            with open(source) as fh:
                text = fh.read()
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "dims,h,origin":
            raise GridError("CSV must start with the header 'dims,h,origin'")
        dims, h, origin = lines[1].split(",")
        counts = [int(v) for v in dims.split()]
        h = np.array([float(v) for v in h.split()])
        lo = np.array([float(v) for v in origin.split()])
        hi = lo + h * (np.array(counts) - 1)
        vals = np.array([float(v) for v in lines[2:]])
        if vals.size != int(np.prod(counts)):
            raise GridError(f"expected {int(np.prod(counts))} values, got {vals.size}")
        grid = Grid(lo, hi, counts, domain, metric)
        grid.h = h
        return cls(grid, vals)


def coordinate_jet(u, node):
    """Centered-difference coordinate jet at a flat interior index ``node``."""
    g = u.grid
    f = u.flat
    n, s, h = g.n, g.strides, g.h
    c = f[node]
    p = np.empty(n)
    A = np.empty((n, n))
    for i in range(n):
        up, um = f[node + s[i]], f[node - s[i]]
        p[i] = (up - um) / (2 * h[i])
        A[i, i] = (up - 2 * c + um) / (h[i] * h[i])
        for j in range(i):
            v = (f[node + s[i] + s[j]] - f[node + s[i] - s[j]]
                 - f[node - s[i] + s[j]] + f[node - s[i] - s[j]]) / (4 * h[i] * h[j])
            A[i, j] = A[j, i] = v
    return Jet2(float(c), p, A)


def discrete_jet(u, metric, node):
    """Riemannian jet of ``u`` at an interior node, in the orthonormal frame."""
    node = int(np.ravel_multi_index(node, u.grid.counts)) if not np.isscalar(node) else int(node)
    if not u.grid.interior.reshape(-1)[node]:
        raise GridError("discrete_jet needs an interior node")
    J = coordinate_jet(u, node)
    return framed_jet(metric, u.grid.point(node), J)

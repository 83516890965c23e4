"""Discretization of the upper half-space and of the measure dgamma(y) dt/t.

A HalfSpaceGrid is a tensor grid: uniform nodes in a compact spatial box
(one axis per dimension, n in {1, 2}) times log-uniform nodes in t.  The
Haar weight dt/t is exact on the log grid (it becomes a constant
delta(log t)); spatial quadrature is the trapezoid rule, which on the
Gaussian weight is accurate far beyond any tolerance used here as long as
functions vanish near the box boundary.

Functions are assumed compactly supported inside the box.  With the default
box [-8, 8] the truncated Gaussian mass is below 1e-27.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "GridFunction",
    "HalfSpaceGrid",
    "RegionMask",
    "SpatialFunction",
    "default_grid",
    "halfspace_integral",
    "lp_gamma_norm",
    "restrict",
    "read_grid_function",
    "write_grid_function",
    "read_mask_csv",
    "write_mask_csv",
]

_GTNT_MAGIC = b"GTNT"
_GTNT_VERSION = 1


@dataclass(eq=True)
class HalfSpaceGrid:
    """Tensor grid over box x [t_min, t_max], log-uniform in t."""

    spatial_box: tuple          # ((lo, hi), ...) one pair per axis
    nx: tuple                   # nodes per axis
    t_min: float
    t_max: float
    nt: int

    def __post_init__(self):
        box = tuple((float(a), float(b)) for a, b in self.spatial_box)
        self.spatial_box = box
        self.nx = tuple(int(k) for k in np.atleast_1d(self.nx))
        if len(box) != len(self.nx):
            raise ValueError("one nx per spatial axis required")
        if len(box) not in (1, 2):
            raise ValueError("only n in {1, 2} supported")
        if not (0.0 < self.t_min < self.t_max):
            raise ValueError("need 0 < t_min < t_max")
        if self.nt < 2 or any(k < 2 for k in self.nx):
            raise ValueError("need at least 2 nodes per axis")
        for (a, b) in box:
            if not a < b:
                raise ValueError("degenerate spatial box")

    # -- spatial structure -------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.spatial_box)

    @cached_property
    def axes(self) -> tuple:
        return tuple(np.linspace(a, b, k)
                     for (a, b), k in zip(self.spatial_box, self.nx))

    @cached_property
    def spacing(self) -> tuple:
        return tuple((b - a) / (k - 1)
                     for (a, b), k in zip(self.spatial_box, self.nx))

    @property
    def cell(self) -> float:
        """One-cell tolerance scale: the largest spatial spacing."""
        return max(self.spacing)

    @property
    def shape(self) -> tuple:
        return self.nx

    @cached_property
    def points(self) -> np.ndarray:
        """All spatial nodes, flattened C-order, shape (N, n)."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @property
    def n_spatial(self) -> int:
        return int(np.prod(self.nx))

    @cached_property
    def wy(self) -> np.ndarray:
        """Trapezoid quadrature weights over spatial nodes, flattened."""
        per_axis = []
        for d, k in zip(self.spacing, self.nx):
            w = np.full(k, d)
            w[0] = w[-1] = d / 2.0
            per_axis.append(w)
        w = per_axis[0]
        for wa in per_axis[1:]:
            w = np.multiply.outer(w, wa)
        return w.ravel()

    @cached_property
    def gamma_y(self) -> np.ndarray:
        """Gaussian quadrature weights exp(-|y|^2) * wy at spatial nodes."""
        sq = np.sum(self.points ** 2, axis=1)
        return np.exp(-sq) * self.wy

    @cached_property
    def m_y(self) -> np.ndarray:
        """Cutoff m at every spatial node."""
        r = np.linalg.norm(self.points, axis=1)
        with np.errstate(divide="ignore"):
            return np.minimum(1.0, np.where(r > 0, 1.0 / r, np.inf))

    @cached_property
    def pairwise_dist(self) -> np.ndarray:
        """|y_i - x_k| for all spatial node pairs, shape (N, N)."""
        p = self.points
        if self.n == 1:
            return np.abs(p[:, 0][:, None] - p[:, 0][None, :])
        diff = p[:, None, :] - p[None, :, :]
        return np.sqrt(np.sum(diff ** 2, axis=-1))

    # -- t structure -------------------------------------------------------

    @cached_property
    def t(self) -> np.ndarray:
        return np.geomspace(self.t_min, self.t_max, self.nt)

    @cached_property
    def wt(self) -> np.ndarray:
        """Trapezoid weights in log t; this realizes dt/t exactly."""
        dlog = (np.log(self.t_max) - np.log(self.t_min)) / (self.nt - 1)
        w = np.full(self.nt, dlog)
        w[0] = w[-1] = dlog / 2.0
        return w

    # -- helpers -----------------------------------------------------------

    def nearest_spatial_index(self, y) -> int:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        idx = []
        for ax, yc in zip(self.axes, y):
            idx.append(int(np.clip(np.round((yc - ax[0]) / (ax[1] - ax[0])), 0, len(ax) - 1)))
        return int(np.ravel_multi_index(tuple(idx), self.nx))

    def nearest_t_index(self, t: float) -> int:
        u = (np.log(t) - np.log(self.t_min)) / (np.log(self.t_max) - np.log(self.t_min))
        return int(np.clip(np.round(u * (self.nt - 1)), 0, self.nt - 1))

    def contains_spatial(self, y) -> bool:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return all(a <= yc <= b for (a, b), yc in zip(self.spatial_box, y))


def default_grid(nx: int = 512, nt: int = 128) -> HalfSpaceGrid:
    """The desk-scale default: n=1, box [-8, 8], t in [1e-3, 8]."""
    return HalfSpaceGrid(spatial_box=((-8.0, 8.0),), nx=(nx,),
                         t_min=1e-3, t_max=8.0, nt=nt)


@dataclass
class GridFunction:
    """Real values on (spatial node, t node); immutable by convention."""

    grid: HalfSpaceGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape == self.grid.shape + (self.grid.nt,):
            v = v.reshape(self.grid.n_spatial, self.grid.nt)
        if v.shape != (self.grid.n_spatial, self.grid.nt):
            raise ValueError(f"values shape {v.shape} does not match grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.setflags(write=False)
        self.values = v

    @classmethod
    def from_callable(cls, grid: HalfSpaceGrid, fn) -> "GridFunction":
        y = grid.points
        t = grid.t
        vals = np.empty((grid.n_spatial, grid.nt))
        for j, tj in enumerate(t):
            vals[:, j] = fn(y, tj)
        return cls(grid, vals)

    @classmethod
    def zero(cls, grid: HalfSpaceGrid) -> "GridFunction":
        return cls(grid, np.zeros((grid.n_spatial, grid.nt)))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        if other.grid != self.grid:
            raise ValueError("grid mismatch")
        return GridFunction(self.grid, self.values + other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * float(c))

    __rmul__ = __mul__


@dataclass
class SpatialFunction:
    """Real values over spatial nodes only (S f, C f, M f, h(x), ...)."""

    grid: HalfSpaceGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape == self.grid.shape:
            v = v.ravel()
        if v.shape != (self.grid.n_spatial,):
            raise ValueError("values shape does not match grid")
        self.values = v


@dataclass
class RegionMask:
    """Boolean node set, either spatial (subsets of R^n) or half-space."""

    grid: HalfSpaceGrid
    mask: np.ndarray = field(repr=False)
    kind: str = "spatial"

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if self.kind == "spatial":
            if m.shape == self.grid.shape:
                m = m.ravel()
            if m.shape != (self.grid.n_spatial,):
                raise ValueError("spatial mask shape mismatch")
        elif self.kind == "halfspace":
            if m.shape == self.grid.shape + (self.grid.nt,):
                m = m.reshape(self.grid.n_spatial, self.grid.nt)
            if m.shape != (self.grid.n_spatial, self.grid.nt):
                raise ValueError("halfspace mask shape mismatch")
        else:
            raise ValueError("kind must be 'spatial' or 'halfspace'")
        self.mask = m

    def complement(self) -> "RegionMask":
        return RegionMask(self.grid, ~self.mask, self.kind)


def halfspace_integral(f: GridFunction) -> float:
    """Sum f * exp(-|y|^2) wy * w(log t) over all nodes (trapezoid ends).

    numpy's pairwise reduction keeps order sensitivity below 1e-12 relative.
    """
    g = f.grid
    return float(np.sum(f.values * g.gamma_y[:, None] * g.wt[None, :]))


def lp_gamma_norm(g: SpatialFunction, p) -> float:
    """(sum |g|^p exp(-|x|^2) wy)^{1/p}; p = inf gives max |g|."""
    if p == np.inf or p == "inf":
        return float(np.max(np.abs(g.values))) if g.values.size else 0.0
    p = float(p)
    if p < 1.0:
        raise ValueError("p must be >= 1")
    return float(np.sum(np.abs(g.values) ** p * g.grid.gamma_y) ** (1.0 / p))


def restrict(f: GridFunction, mask: RegionMask) -> GridFunction:
    if mask.grid != f.grid:
        raise ValueError("grid mismatch")
    if mask.kind == "spatial":
        return GridFunction(f.grid, f.values * mask.mask[:, None])
    return GridFunction(f.grid, f.values * mask.mask)


# -- I/O ------------------------------------------------------------------


def write_grid_function(f: GridFunction, path) -> None:
    """CSV (header: y..., t, value) or binary GTNT by file extension."""
    path = Path(path)
    if path.suffix == ".csv":
        _write_csv(f, path)
    else:
        _write_gtnt(f, path)


def read_grid_function(path, grid: HalfSpaceGrid | None = None) -> GridFunction:
    path = Path(path)
    if path.suffix == ".csv":
        return _read_csv(path, grid)
    f = _read_gtnt(path)
    if grid is not None and f.grid != grid:
        raise ValueError("file grid does not match the requested grid")
    return f


def _write_csv(f: GridFunction, path: Path) -> None:
    g = f.grid
    cols = [f"y{d}" for d in range(g.n)] + ["t", "value"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i, y in enumerate(g.points):
            for j, tj in enumerate(g.t):
                ys = ",".join(repr(float(c)) for c in y)
                fh.write(f"{ys},{float(tj)!r},{float(f.values[i, j])!r}\n")


def _read_csv(path: Path, grid: HalfSpaceGrid | None) -> GridFunction:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = data.shape[1] - 2
    ys, ts, vals = data[:, :n], data[:, n], data[:, n + 1]
    if grid is None:
        grid = _infer_grid(ys, ts)
    f = np.zeros((grid.n_spatial, grid.nt))
    for row_y, row_t, v in zip(ys, ts, vals):
        f[grid.nearest_spatial_index(row_y), grid.nearest_t_index(row_t)] = v
    return GridFunction(grid, f)


def _infer_grid(ys: np.ndarray, ts: np.ndarray) -> HalfSpaceGrid:
    n = ys.shape[1]
    box, nx = [], []
    for d in range(n):
        vals = np.unique(ys[:, d])
        box.append((float(vals[0]), float(vals[-1])))
        nx.append(len(vals))
    tvals = np.unique(ts)
    return HalfSpaceGrid(tuple(box), tuple(nx), float(tvals[0]), float(tvals[-1]), len(tvals))


def _write_gtnt(f: GridFunction, path: Path) -> None:
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(_GTNT_MAGIC)
        fh.write(struct.pack("<II", _GTNT_VERSION, g.n))
        for k in g.nx:
            fh.write(struct.pack("<I", k))
        fh.write(struct.pack("<I", g.nt))
        for (a, b) in g.spatial_box:
            fh.write(struct.pack("<dd", a, b))
        fh.write(struct.pack("<dd", g.t_min, g.t_max))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def _read_gtnt(path: Path) -> GridFunction:
    with open(path, "rb") as fh:
        if fh.read(4) != _GTNT_MAGIC:
            raise ValueError("not a GTNT file")
        version, n = struct.unpack("<II", fh.read(8))
        if version != _GTNT_VERSION:
            raise ValueError(f"unsupported GTNT version {version}")
        nx = tuple(struct.unpack("<I", fh.read(4))[0] for _ in range(n))
        nt = struct.unpack("<I", fh.read(4))[0]
        box = tuple(struct.unpack("<dd", fh.read(16)) for _ in range(n))
        t_min, t_max = struct.unpack("<dd", fh.read(16))
        grid = HalfSpaceGrid(box, nx, t_min, t_max, nt)
        payload = np.frombuffer(fh.read(), dtype="<f8").reshape(grid.n_spatial, nt)
    return GridFunction(grid, payload.copy())


def write_mask_csv(mask: RegionMask, path) -> None:
    np.savetxt(path, mask.mask.astype(int).reshape(1, -1) if mask.mask.ndim == 1
               else mask.mask.astype(int), fmt="%d", delimiter=",")


def read_mask_csv(path, grid: HalfSpaceGrid, kind: str = "spatial") -> RegionMask:
    raw = np.loadtxt(path, delimiter=",", ndmin=2).astype(bool)
    if kind == "spatial":
        return RegionMask(grid, raw.ravel(), kind)
    return RegionMask(grid, raw, kind)

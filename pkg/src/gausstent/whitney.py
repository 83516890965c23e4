"""Covering machinery: density points, tents of masks, Whitney cubes/balls.

Distances from grid nodes to node sets are exact Euclidean distance
transforms (scipy's two-pass EDT) with the box exterior counted as
complement.  All set operations are resolution-limited; audits allow a
one-grid-cell tolerance and say so in their reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import distance_transform_edt

from .geometry import Ball, ConeSpec, UpperPoint, cutoff_m, gamma_ball, is_admissible
from .grid import GridFunction, HalfSpaceGrid, RegionMask
from .functionals import BallDictionary, cone_caps, grid_gamma_den

__all__ = [
    "DyadicCube",
    "WhitneyCover",
    "complement_distance",
    "cube_bounds",
    "cube_center",
    "density_inequality_check",
    "density_points",
    "doubling_constant",
    "etabar_from_doubling",
    "is_admissible_whitney",
    "mask_tent_contains",
    "plus_C",
    "region_R_mask",
    "reverse_fubini_check",
    "set_distance",
    "tent_mask",
    "whitney_balls",
    "whitney_cubes",
]


# -- distances and tents of masks -----------------------------------------


def complement_distance(O: RegionMask) -> np.ndarray:
    """dist(x, O^c) at every node; the box exterior belongs to O^c."""
    if O.kind != "spatial":
        raise ValueError("spatial mask required")
    g = O.grid
    shaped = O.mask.reshape(g.shape)
    padded = np.pad(shaped, 1, constant_values=False)
    d = distance_transform_edt(padded, sampling=g.spacing)
    sl = tuple(slice(1, -1) for _ in range(g.n))
    return np.asarray(d[sl]).ravel()


def set_distance(A: RegionMask) -> np.ndarray:
    """dist(x, A) at every node (inf when A is empty)."""
    if A.kind != "spatial":
        raise ValueError("spatial mask required")
    g = A.grid
    if not A.mask.any():
        return np.full(g.n_spatial, np.inf)
    d = distance_transform_edt(~A.mask.reshape(g.shape), sampling=g.spacing)
    return np.asarray(d).ravel()


def tent_mask(O: RegionMask, alpha: float, beta: float,
              shrink: float = 1.0) -> RegionMask:
    """Half-space node set of the tent over O: dist(y, O^c) >= cap(y, t).

    shrink scales both apertures, i.e. shrink=1-eta gives the tent at
    ((1-eta) alpha, (1-eta) beta) used by the band structure.
    """
    g = O.grid
    caps = shrink * cone_caps(g, ConeSpec(alpha, beta))
    d = complement_distance(O)
    return RegionMask(g, d[:, None] >= caps, kind="halfspace")


def mask_tent_contains(O: RegionMask, alpha: float, beta: float,
                       p: UpperPoint) -> bool:
    """Tent membership for an arbitrary (y, t), distance read at the nearest
    node (one-cell tolerance)."""
    g = O.grid
    d = complement_distance(O)[g.nearest_spatial_index(p.y)]
    return d >= min(alpha * p.t, beta * cutoff_m(np.asarray(p.y)))


def region_R_mask(F: RegionMask, alpha: float, beta: float,
                  shrink: float = 1.0) -> RegionMask:
    """Union of cones with vertices in F: nodes with dist(y, F) < cap."""
    g = F.grid
    caps = shrink * cone_caps(g, ConeSpec(alpha, beta))
    d = set_distance(F)
    return RegionMask(g, d[:, None] < caps, kind="halfspace")


# -- density points --------------------------------------------------------


def density_points(A: RegionMask, eta: float, level: float,
                   n_levels: int = 7) -> RegionMask:
    """Nodes x where every centered admissible ball carries A-density >= eta.

    Balls are the centered ladder B(x, 2^-k level m(x)), k = 0..n_levels-1,
    the graded stand-in for all radii up to the admissible scale; density
    ratios use the grid quadrature gamma in numerator and denominator.
    """
    if not (0.0 < eta < 1.0):
        raise ValueError("eta must lie in (0, 1)")
    g = A.grid
    D = g.pairwise_dist
    gw = g.gamma_y
    in_A = gw * A.mask
    ok = np.ones(g.n_spatial, dtype=bool)
    base = level * g.m_y
    for k in range(n_levels):
        r = base * 2.0 ** (-k)
        mask = D < r[:, None]
        num = mask @ in_A
        den = mask @ gw
        ok &= num >= eta * den
    return RegionMask(g, ok)


def plus_C(A: RegionMask, level: float,
           dict_: BallDictionary | None = None) -> RegionMask:
    """Centers of admissible balls (level) that intersect A.

    With no dictionary the supremal radius level*m(x) decides: x qualifies
    iff dist(x, A) < level*m(x).  With a dictionary, only its balls vote.
    """
    g = A.grid
    if dict_ is None:
        d = set_distance(A)
        return RegionMask(g, d < level * g.m_y)
    out = np.zeros(g.n_spatial, dtype=bool)
    dA = set_distance(A)
    for B in dict_.balls:
        if not is_admissible(B, level):
            continue
        i = g.nearest_spatial_index(B.center_array)
        if dA[i] < B.radius:
            out[i] = True
    return RegionMask(g, out)


def is_admissible_whitney(W: RegionMask, level: float) -> bool:
    """Every node of W within level*m(x) of the complement."""
    d = complement_distance(W)
    m = W.grid.m_y
    sel = W.mask
    return bool(np.all(d[sel] <= level * m[sel]))


# -- Whitney cube covers ---------------------------------------------------


@dataclass(frozen=True)
class DyadicCube:
    """Dyadic cube of side 2^-level anchored at the spatial box corner."""

    level: int
    index: tuple


def cube_bounds(cube: DyadicCube, grid: HalfSpaceGrid):
    side = 2.0 ** (-cube.level)
    lo = np.array([a for a, _ in grid.spatial_box]) + side * np.asarray(cube.index)
    return lo, lo + side


def cube_center(cube: DyadicCube, grid: HalfSpaceGrid) -> np.ndarray:
    lo, hi = cube_bounds(cube, grid)
    return (lo + hi) / 2.0


@dataclass
class WhitneyCover:
    """Disjoint dyadic cubes (or bounded-overlap balls) filling a target."""

    target: RegionMask
    cubes: tuple = ()
    balls: tuple = ()
    cube_nodes: tuple = ()      # node indices per cube
    cube_dist: tuple = ()       # min node distance to target complement
    audit: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        body = {"audit": self.audit}
        if self.cubes:
            body["cubes"] = [{"level": c.level, "index": list(c.index)}
                             for c in self.cubes]
        if self.balls:
            body["balls"] = [{"center": list(b.center), "radius": b.radius}
                             for b in self.balls]
        return body


def _box_base_level(grid: HalfSpaceGrid) -> int:
    widths = [b - a for a, b in grid.spatial_box]
    w = widths[0]
    if any(abs(x - w) > 1e-12 for x in widths):
        raise ValueError("dyadic tiling needs equal box widths")
    lvl = round(np.log2(w))
    if abs(2.0 ** lvl - w) > 1e-9:
        raise ValueError("dyadic tiling needs a power-of-two box width")
    return -lvl


def whitney_cubes(O: RegionMask) -> WhitneyCover:
    """Maximal dyadic cubes inside O with diam(Q) <= dist(Q, O^c).

    Splitting stops once the side reaches one grid cell, where a cube holds
    at most one node; pure sub-cell cubes are emitted regardless of the
    distance test so that every node of O is covered.  The classical bracket
    diam <= dist <= 4 diam then holds up to a one-cell tolerance, which the
    audit records.
    """
    if O.kind != "spatial":
        raise ValueError("spatial mask required")
    g = O.grid
    if O.mask.all():
        raise ValueError("O equals the whole box; no complement to measure from")
    base_level = _box_base_level(g)
    edt = complement_distance(O)
    sqrt_n = np.sqrt(g.n)
    cell = min(g.spacing)
    corner = np.array([a for a, _ in g.spatial_box])

    cubes, nodes_per, dist_per = [], [], []

    def recurse(level: int, index: tuple, node_idx: np.ndarray):
        if node_idx.size == 0:
            return
        side = 2.0 ** (-level)
        inside = bool(O.mask[node_idx].all())
        dist_q = float(edt[node_idx].min()) if inside else 0.0
        diam = side * sqrt_n
        if inside and (diam <= dist_q or side <= cell):
            cubes.append(DyadicCube(level, index))
            nodes_per.append(node_idx)
            dist_per.append(dist_q)
            return
        if side <= cell:
            return  # impure at resolution cap: dropped (boundary layer)
        half = side / 2.0
        pts = g.points[node_idx]
        mid = corner + side * np.asarray(index) + half
        child_bit = (pts >= mid).astype(int)
        for corner_bits in np.ndindex(*(2,) * g.n):
            sel = np.all(child_bit == np.asarray(corner_bits), axis=1)
            child_index = tuple(2 * i + b for i, b in zip(index, corner_bits))
            recurse(level + 1, child_index, node_idx[sel])

    recurse(base_level, (0,) * g.n, np.arange(g.n_spatial))

    audit = _audit_cubes(O, cubes, nodes_per, dist_per, edt)
    return WhitneyCover(target=O, cubes=tuple(cubes), cube_nodes=tuple(nodes_per),
                        cube_dist=tuple(dist_per), audit=audit)


def _audit_cubes(O, cubes, nodes_per, dist_per, edt) -> dict:
    g = O.grid
    cell = g.cell
    sqrt_n = np.sqrt(g.n)
    bracket_low = bracket_high = True
    for c, d in zip(cubes, dist_per):
        diam = 2.0 ** (-c.level) * sqrt_n
        if diam > d + cell:
            bracket_low = False
        if d > 4.0 * diam + cell:
            bracket_high = False
    covered = np.zeros(g.n_spatial, dtype=bool)
    count = np.zeros(g.n_spatial, dtype=int)
    for idx in nodes_per:
        covered[idx] = True
        count[idx] += 1
    uncovered = O.mask & ~covered
    # every uncovered O node must sit in the one-cell boundary layer
    boundary_ok = bool(np.all(edt[uncovered] <= cell * sqrt_n + 1e-12)) \
        if uncovered.any() else True
    return {
        "n_cubes": len(cubes),
        "bracket_lower_ok": bracket_low,
        "bracket_upper_ok": bracket_high,
        "disjoint": bool(np.all(count <= 1)),
        "covered_fraction": float(covered[O.mask].mean()) if O.mask.any() else 1.0,
        "uncovered_within_boundary_layer": boundary_ok,
        "tolerance_cells": 1,
    }


# -- Whitney ball covers (Vitali-type, q = infinity path) ------------------


def whitney_balls(O: RegionMask, C_overlap: float = 2.0) -> WhitneyCover:
    """Greedy depth-first ball cover of O with radii dist(x, O^c)/C.

    Picks the deepest uncovered node (ties broken lexicographically), emits
    B(x, d(x)/C), and repeats.  With C >= 2 this yields: O = union of the
    balls (exact on nodes), C*B_j touches O^c (radius d(x) exactly reaches
    the nearest complement node), and the shrunken family {C^-1 B_j} is
    pairwise disjoint.  Bounded overlap is measured and reported.
    """
    if O.kind != "spatial":
        raise ValueError("spatial mask required")
    if C_overlap < 2.0:
        raise ValueError("C_overlap >= 2 required for the covering guarantee")
    g = O.grid
    if O.mask.all():
        raise ValueError("O equals the whole box")
    C = float(C_overlap)
    edt = complement_distance(O)
    D = g.pairwise_dist
    order = np.argsort(-edt, kind="stable")  # stable: lexicographic ties
    covered = np.zeros(g.n_spatial, dtype=bool)
    balls, radii, centers_idx = [], [], []
    for i in order:
        if covered[i] or not O.mask[i]:
            continue
        r = edt[i] / C
        balls.append(Ball(tuple(g.points[i]), r))
        radii.append(r)
        centers_idx.append(i)
        covered |= D[i] < r
        covered[i] = True

    audit = _audit_balls(O, balls, centers_idx, edt, C, D)
    return WhitneyCover(target=O, balls=tuple(balls), audit=audit)


def _audit_balls(O, balls, centers_idx, edt, C, D) -> dict:
    g = O.grid
    cell = g.cell
    n_balls = len(balls)
    covered = np.zeros(g.n_spatial, dtype=bool)
    overlap = np.zeros(g.n_spatial, dtype=int)
    meets = True
    for b, i in zip(balls, centers_idx):
        inside = D[i] <= b.radius
        covered |= inside
        overlap += inside
        # C*B must reach the complement: nearest complement node at edt[i]
        if edt[i] > C * b.radius + cell:
            meets = False
    disjoint = True
    for a in range(n_balls):
        for b in range(a + 1, n_balls):
            gap = D[centers_idx[a], centers_idx[b]]
            if gap < (balls[a].radius + balls[b].radius) / C - 1e-12:
                disjoint = False
    return {
        "n_balls": n_balls,
        "covers_target": bool(covered[O.mask].all()),
        "inflated_meet_complement": meets,
        "shrunken_disjoint": disjoint,
        "max_overlap": int(overlap.max()) if n_balls else 0,
        "tolerance_cells": 1,
    }


# -- doubling constants and the two integral-inequality checks -------------


def doubling_constant(grid: HalfSpaceGrid, level: float,
                      dict_: BallDictionary) -> float:
    """Measured sup of gamma(2B)/gamma(B) over admissible dictionary balls."""
    worst = 1.0
    for B in dict_.balls:
        if not is_admissible(B, level):
            continue
        worst = max(worst, gamma_ball(B.scaled(2.0)) / gamma_ball(B))
    return worst


def etabar_from_doubling(C: float) -> float:
    """Midpoint of the admissible interval (1 - 1/C, 1)."""
    if C <= 1.0:
        raise ValueError("doubling constant must exceed 1")
    return 1.0 - 1.0 / (2.0 * C)


def _cone_average_over(A_mask: np.ndarray, H: GridFunction,
                       spec: ConeSpec) -> float:
    """int_A ( iint_{cone(x)} H / gamma(B(y, cap)) dgamma dt/t ) dgamma(x),
    evaluated by the exact grid rearrangement."""
    g = H.grid
    caps = cone_caps(g, spec)
    den = grid_gamma_den(g, spec)
    D = g.pairwise_dist
    gw_A = g.gamma_y * A_mask
    total = 0.0
    Hv = H.values
    for j in range(g.nt):
        rows = np.nonzero(Hv[:, j])[0]
        if rows.size == 0:
            continue
        mass_in_A = (D[rows] < caps[rows, j][:, None]) @ gw_A
        total += float(np.sum(Hv[rows, j] * g.gamma_y[rows] * g.wt[j]
                              * mass_in_A / den[rows, j]))
    return total


def density_inequality_check(A: RegionMask, H: GridFunction, eta: float,
                             etabar: float, spec: ConeSpec,
                             dict_: BallDictionary | None = None) -> dict:
    """Ratio report for the density-point integral inequality.

    LHS integrates H over the cone-union region with vertices in the
    etabar-density points of A (admissibility level beta(1+beta), shrunken
    apertures (1-eta)); RHS is the A-restricted cone average of H.  The
    guaranteed lower bound (etabar - 1 + 1/C) * exp(-3 beta (2+beta)) is
    reported alongside the measured doubling constant C when a dictionary is
    supplied.
    """
    if np.any(H.values < 0):
        raise ValueError("H must be nonnegative")
    g = H.grid
    lam = spec.beta * (1.0 + spec.beta)
    A_eta = density_points(A, etabar, lam)
    R = region_R_mask(A_eta, spec.alpha, spec.beta, shrink=1.0 - eta)
    lhs = float(np.sum(H.values * R.mask * g.gamma_y[:, None] * g.wt[None, :]))
    rhs = _cone_average_over(A.mask.astype(float), H, spec)
    report = {
        "lhs": lhs,
        "rhs": rhs,
        "ratio": lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else np.inf),
        "vacuous": rhs == 0 and lhs == 0,
        "density_set_size": int(A_eta.mask.sum()),
    }
    if dict_ is not None:
        C = doubling_constant(g, lam, dict_)
        K = np.exp(-3.0 * spec.beta * (2.0 + spec.beta))
        report["doubling_constant"] = C
        report["lambda_lower_bound"] = (etabar - 1.0 + 1.0 / C) * K
    return report


def containing_density_points(F: RegionMask, eta: float, beta: float,
                              dict_: BallDictionary) -> RegionMask:
    """Nodes x such that every admissible dictionary ball containing x has
    gamma(B & F) >= eta gamma(B) — the containing-ball variant."""
    g = F.grid
    gw = g.gamma_y
    in_F = gw * F.mask
    ok = np.ones(g.n_spatial, dtype=bool)
    for B in dict_.balls:
        if not is_admissible(B, beta):
            continue
        inside = np.linalg.norm(g.points - B.center_array, axis=1) < B.radius
        if not inside.any():
            continue
        if in_F[inside].sum() < eta * gw[inside].sum():
            ok &= ~inside
    return RegionMask(g, ok)


def reverse_fubini_check(F: RegionMask, H: GridFunction, eta: float,
                         alpha: float, beta: float, delta: float,
                         dict_: BallDictionary) -> dict:
    """Ratio report for the reverse Fubini inequality with containing balls.

    LHS integrates H over the alpha-aperture cone union with vertices in the
    containing-ball density set of F; RHS is the F-restricted cone average
    at the wider aperture delta >= alpha.  The analytic constant is
    (delta/alpha)^n exp(-(2+beta) beta).
    """
    if np.any(H.values < 0):
        raise ValueError("H must be nonnegative")
    if delta < alpha:
        raise ValueError("delta >= alpha required")
    g = H.grid
    F_tilde = containing_density_points(F, eta, beta, dict_)
    R = region_R_mask(F_tilde, alpha, beta)
    lhs = float(np.sum(H.values * R.mask * g.gamma_y[:, None] * g.wt[None, :]))
    rhs = _cone_average_over(F.mask.astype(float), H, ConeSpec(delta, beta))
    return {
        "lhs": lhs,
        "rhs": rhs,
        "ratio": lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else np.inf),
        "vacuous": rhs == 0 and lhs == 0,
        "analytic_constant": (delta / alpha) ** g.n * np.exp(-(2.0 + beta) * beta),
        "density_set_size": int(F_tilde.mask.sum()),
    }

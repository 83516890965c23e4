"""Area functions, Carleson functional, maximal functions, tent norms.

The area function at aperture (alpha, beta) is

    S_q f(x) = ( sum over cone nodes (y,t) of
                 |f(y,t)|^q / gamma(B(y, alpha t ^ beta m(y))) * w(y,t) )^{1/q}

where the cone is |y - x| < alpha t ^ beta m(y) and w(y,t) are the
dgamma dt/t quadrature weights.  The influence-ball denominators are
evaluated with the same spatial quadrature sum used everywhere else (not the
closed-form erf value): with that convention the Fubini rearrangement

    int S_q^q f dgamma  =  iint |f|^q dgamma dt/t

is an exact identity on the grid, which the T^{p,p} = L^p and duality checks
rely on.  At radii of a few cells or more the two gamma evaluations agree to
O(cell/r); at sub-cell radii (small t) the grid sum is the only convention
under which the identity can hold at all.

Suprema over ball families (Carleson functional, maximal functions) range
over a finite BallDictionary and therefore return certified lower bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Ball, ConeSpec, ConeVariant, cutoff_m, gamma_ball, is_admissible
from .grid import GridFunction, HalfSpaceGrid, SpatialFunction, lp_gamma_norm

__all__ = [
    "BallDictionary",
    "ExponentPair",
    "area_S",
    "area_S_sup",
    "area_S_truncated",
    "carleson_C",
    "cone_caps",
    "default_dictionary",
    "grid_gamma_den",
    "grid_gamma_window",
    "maximal_centered",
    "maximal_noncentered",
    "stopping_time",
    "tent_norm",
]


@dataclass(frozen=True)
class ExponentPair:
    """(p, q) with the combinations of the tent-space scale.

    p = inf requires 1 < q < inf; q = inf requires the caller to flag
    continuous intent on the function at norm time.
    """

    p: float
    q: float

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 1):
            raise ValueError("exponents must be >= 1")
        if self.p == np.inf and not (1.0 < self.q < np.inf):
            raise ValueError("p = inf requires 1 < q < inf")


@dataclass(frozen=True)
class BallDictionary:
    """Finite search family standing in for the uncountable ball suprema."""

    balls: tuple

    def __post_init__(self):
        if len(self.balls) == 0:
            raise ValueError("empty ball dictionary")
        object.__setattr__(self, "balls", tuple(self.balls))

    def admissible(self, level: float) -> "BallDictionary":
        kept = [b for b in self.balls if is_admissible(b, level)]
        if not kept:
            raise ValueError(f"no dictionary ball admissible at level {level}")
        return BallDictionary(tuple(kept))


def default_dictionary(grid: HalfSpaceGrid, beta: float,
                       stride: int = 4, n_levels: int = 7) -> BallDictionary:
    """Centers at every stride-th node, radii {2^-k beta m(c)}, k = 0..6.

    k = 0 is the exact admissibility boundary radius beta*m(c).
    """
    balls = []
    idx = [np.arange(0, k, stride) for k in grid.nx]
    mesh = np.meshgrid(*idx, indexing="ij")
    flat = np.ravel_multi_index(tuple(m.ravel() for m in mesh), grid.nx)
    for i in flat:
        c = grid.points[i]
        base = beta * cutoff_m(c)
        for k in range(n_levels):
            balls.append(Ball(tuple(c), base * 2.0 ** (-k)))
    return BallDictionary(tuple(balls))


def cone_caps(grid: HalfSpaceGrid, spec: ConeSpec) -> np.ndarray:
    """alpha t ^ beta m(y) on all (y, t) nodes, shape (N, nt)."""
    return np.minimum(spec.alpha * grid.t[None, :], spec.beta * grid.m_y[:, None])


_den_cache: dict = {}


def _grid_key(grid: HalfSpaceGrid) -> tuple:
    return (grid.spatial_box, grid.nx, grid.t_min, grid.t_max, grid.nt)


def grid_gamma_den(grid: HalfSpaceGrid, spec: ConeSpec) -> np.ndarray:
    """gamma of B(y_i, cap_ij) by the grid quadrature sum, shape (N, nt).

    Shared by every vertex whose cone contains (y_i, t_j); cached per
    (grid, alpha, beta).
    """
    key = (_grid_key(grid), spec.alpha, spec.beta)
    den = _den_cache.get(key)
    if den is None:
        caps = cone_caps(grid, spec)
        D = grid.pairwise_dist
        gw = grid.gamma_y
        den = np.empty_like(caps)
        for j in range(grid.nt):
            den[:, j] = (D < caps[:, j][:, None]) @ gw
        _den_cache[key] = den
    return den


def grid_gamma_window(grid: HalfSpaceGrid, centers: np.ndarray, radii: np.ndarray,
                      node_values: np.ndarray | None = None) -> np.ndarray:
    """Sum of node_values (default: the gamma weights) over |x - c| < r.

    centers: node indices, radii: matching radii; strict inequality to match
    the cone predicate.
    """
    vals = grid.gamma_y if node_values is None else node_values
    D = grid.pairwise_dist
    out = np.empty(len(centers))
    for k, (i, r) in enumerate(zip(centers, radii)):
        out[k] = vals[D[i] < r].sum()
    return out


def _check_area_args(f: GridFunction, spec: ConeSpec):
    if spec.variant is not ConeVariant.PENCIL:
        raise ValueError("area functions use the pencil cone (cap beta*m(y))")


def area_S(f: GridFunction, q: float, spec: ConeSpec) -> SpatialFunction:
    """The q-area function; evaluated at every grid vertex."""
    _check_area_args(f, spec)
    q = float(q)
    if not (1.0 <= q < np.inf):
        raise ValueError("q must lie in [1, inf)")
    g = f.grid
    caps = cone_caps(g, spec)
    den = grid_gamma_den(g, spec)
    D = g.pairwise_dist
    absq = np.abs(f.values) ** q
    Sq = np.zeros(g.n_spatial)
    for j in range(g.nt):
        rows = np.nonzero(absq[:, j])[0]
        if rows.size == 0:
            continue
        mask = D[rows] < caps[rows, j][:, None]
        contrib = absq[rows, j] * g.gamma_y[rows] * g.wt[j] / den[rows, j]
        Sq += contrib @ mask
    return SpatialFunction(g, Sq ** (1.0 / q))


def area_S_sup(f: GridFunction, spec: ConeSpec) -> SpatialFunction:
    """S_inf: pointwise sup of |f| over the cone nodes."""
    _check_area_args(f, spec)
    g = f.grid
    caps = cone_caps(g, spec)
    D = g.pairwise_dist
    absf = np.abs(f.values)
    S = np.zeros(g.n_spatial)
    for j in range(g.nt):
        rows = np.nonzero(absf[:, j])[0]
        if rows.size == 0:
            continue
        mask = D[rows] < caps[rows, j][:, None]
        S = np.maximum(S, (absf[rows, j][:, None] * mask).max(axis=0))
    return SpatialFunction(g, S)


def area_S_truncated(f: GridFunction, q: float, spec: ConeSpec, h: float) -> SpatialFunction:
    """Area function over the truncated cone {t < h}."""
    cut = np.where(f.grid.t[None, :] < h, f.values, 0.0)
    return area_S(GridFunction(f.grid, cut), q, spec)


def carleson_C(f: GridFunction, q: float, alpha: float, beta: float,
               dict_: BallDictionary) -> SpatialFunction:
    """C_q f(x): max tent q-average over dictionary balls admitting x.

    A ball admits x when x lies in B(c_B, alpha r_B ^ beta m(c_B)); the
    dictionary is taken literally (no admissibility filter here; contrast
    the Carleson-measure norm, which restricts to admissible balls).
    """
    q = float(q)
    if not (1.0 < q < np.inf):
        raise ValueError("q must lie in (1, inf)")
    g = f.grid
    caps = cone_caps(g, ConeSpec(alpha, beta))
    absq = np.abs(f.values) ** q
    weighted = absq * g.gamma_y[:, None] * g.wt[None, :]
    out = np.zeros(g.n_spatial)
    for B in dict_.balls:
        c = B.center_array
        dist_c = np.linalg.norm(g.points - c, axis=1)
        admit_r = min(alpha * B.radius, beta * cutoff_m(c))
        admit = dist_c < admit_r
        if not admit.any():
            continue
        depth = np.maximum(B.radius - dist_c, 0.0)
        tent = depth[:, None] >= caps
        val = (weighted[tent].sum() / gamma_ball(B)) ** (1.0 / q)
        np.maximum(out, np.where(admit, val, 0.0), out=out)
    return SpatialFunction(g, out)


def tent_norm(f: GridFunction, pq: ExponentPair, alpha: float, beta: float,
              dict_: BallDictionary | None = None,
              continuous_intent: bool = False) -> float:
    """The T^{p,q} norm: ||S_q f||_{L^p(gamma)}, or ||C_q f||_inf at p = inf."""
    spec = ConeSpec(alpha, beta)
    if pq.p == np.inf:
        if dict_ is None:
            raise ValueError("p = inf needs a ball dictionary for C_q")
        return lp_gamma_norm(carleson_C(f, pq.q, alpha, beta, dict_), np.inf)
    if pq.q == np.inf:
        if not continuous_intent:
            raise ValueError("q = inf requires continuous-intent values")
        return lp_gamma_norm(area_S_sup(f, spec), pq.p)
    return lp_gamma_norm(area_S(f, pq.q, spec), pq.p)


def maximal_noncentered(g: SpatialFunction, level: float,
                        dict_: BallDictionary) -> SpatialFunction:
    """Non-centered maximal function over admissible dictionary balls.

    Averages use the grid quadrature for both numerator and denominator so
    that M(1) = 1 exactly.
    """
    grid = g.grid
    gw = grid.gamma_y
    absg = np.abs(g.values)
    out = np.zeros(grid.n_spatial)
    for B in dict_.balls:
        if not is_admissible(B, level):
            continue
        dist_c = np.linalg.norm(grid.points - B.center_array, axis=1)
        inside = dist_c < B.radius
        if not inside.any():
            continue
        den = gw[inside].sum()
        avg = (absg[inside] * gw[inside]).sum() / den
        np.maximum(out, np.where(inside, avg, 0.0), out=out)
    return SpatialFunction(grid, out)


def maximal_centered(g: SpatialFunction, level: float,
                     n_levels: int = 7) -> SpatialFunction:
    """Centered maximal function, radius ladder {2^-k level m(x)}, k=0..6."""
    grid = g.grid
    D = grid.pairwise_dist
    gw = grid.gamma_y
    absg_w = np.abs(g.values) * gw
    out = np.zeros(grid.n_spatial)
    base = level * grid.m_y
    for k in range(n_levels):
        r = base * 2.0 ** (-k)
        mask = D < r[:, None]
        num = mask @ absg_w
        den = mask @ gw
        np.maximum(out, num / den, out=out)
    return SpatialFunction(grid, out)


def stopping_time(g: GridFunction, qprime: float, spec: ConeSpec, M_const: float,
                  h_ladder, cq: SpatialFunction) -> SpatialFunction:
    """h(x): the largest ladder height with S_{q',h} g(x) <= M * C_{q'} g(x).

    cq must be the precomputed Carleson functional of g at exponent q'.
    Sentinels: 0.0 when no height qualifies, +inf when all do.
    """
    h_ladder = sorted(float(h) for h in h_ladder)
    if not h_ladder:
        raise ValueError("empty stopping-time ladder")
    bound = M_const * cq.values
    grid = g.grid
    out = np.zeros(grid.n_spatial)
    all_pass = np.ones(grid.n_spatial, dtype=bool)
    for h in h_ladder:
        ok = area_S_truncated(g, qprime, spec, h).values <= bound
        out = np.where(ok, h, out)
        all_pass &= ok
    out[all_pass] = np.inf
    return SpatialFunction(grid, out)

"""Pairings, Carleson-measure norms, and the duality inequality checks.

The bilinear pairing is iint f g dgamma dt/t on the grid.  The central
chain, for conjugate exponents,

    iint |f g| dgamma dt/t  =  int_x ( iint_{cone(x)} |f g| / gamma(B(y, cap)) ) dgamma(x)
                            <= int S_q f(x) S_{q'} g(x) dgamma(x)
                            <= ||f||_{T^{p,q}} ||g||_{T^{p',q'}}

has an exact first layer on the grid (the averaging insertion is an
identity under the grid-sum denominator convention) and two Hoelder layers;
the checks below assert each layer separately.  The "<= up to a constant"
statements (pairing against a Carleson measure, the S*C route) are reported
as measured constants with stability left to the callers' test families.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import Ball, ConeSpec, cutoff_m, gamma_ball, is_admissible
from .grid import GridFunction, SpatialFunction, halfspace_integral, lp_gamma_norm
from .functionals import (
    BallDictionary,
    ExponentPair,
    area_S,
    carleson_C,
    stopping_time,
    tent_norm,
)
from .whitney import _cone_average_over

__all__ = [
    "DiscreteMeasure",
    "carleson_norm",
    "check_carleson_pairing",
    "check_duality_1q",
    "check_duality_pq",
    "measure_pairing",
    "measured_K_beta",
    "pairing",
    "read_measure_csv",
    "stopping_density",
    "write_measure_csv",
]


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite signed atomic measure on the upper half-space: (y, t, w) rows."""

    points: tuple          # ((y tuple, t, w), ...)

    def __post_init__(self):
        rows = []
        for y, t, w in self.points:
            y = tuple(float(c) for c in np.atleast_1d(y))
            if not t > 0:
                raise ValueError("measure points need t > 0")
            rows.append((y, float(t), float(w)))
        object.__setattr__(self, "points", tuple(rows))

    @property
    def total_variation(self) -> float:
        return float(sum(abs(w) for _, _, w in self.points))

    def scaled(self, c: float) -> "DiscreteMeasure":
        return DiscreteMeasure(tuple((y, t, w * c) for y, t, w in self.points))


def write_measure_csv(mu: DiscreteMeasure, path) -> None:
    with open(path, "w") as fh:
        for y, t, w in mu.points:
            fh.write(",".join(repr(v) for v in (*y, t, w)) + "\n")


def read_measure_csv(path) -> DiscreteMeasure:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    n = data.shape[1] - 2
    return DiscreteMeasure(tuple((tuple(row[:n]), row[n], row[n + 1])
                                 for row in data))


def pairing(f: GridFunction, g: GridFunction) -> float:
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    return halfspace_integral(GridFunction(f.grid, f.values * g.values))


def measure_pairing(mu: DiscreteMeasure, f: GridFunction) -> float:
    """sum w_i f(y_i, t_i) with nearest-node evaluation of f."""
    g = f.grid
    total = 0.0
    for y, t, w in mu.points:
        if not g.contains_spatial(y):
            raise ValueError(f"measure point {y} outside the grid box")
        if not (g.t_min <= t <= g.t_max):
            raise ValueError(f"measure point t={t} outside the t-range")
        total += w * f.values[g.nearest_spatial_index(y), g.nearest_t_index(t)]
    return total


def carleson_norm(mu: DiscreteMeasure, alpha: float, beta: float,
                  delta: float, dict_: BallDictionary) -> dict:
    """max over dictionary balls of |mu|(tent of B) / gamma(B), with witness.

    The dictionary must consist of delta-admissible balls (Carleson-measure
    convention; contrast the unrestricted Carleson-functional supremum).
    """
    bad = [b for b in dict_.balls if not is_admissible(b, delta)]
    if bad:
        raise ValueError(f"{len(bad)} dictionary balls not admissible at level {delta}")
    best, witness = 0.0, None
    table = []
    for B in dict_.balls:
        mass = 0.0
        c = B.center_array
        for y, t, w in mu.points:
            yv = np.asarray(y)
            depth = max(B.radius - float(np.linalg.norm(yv - c)), 0.0)
            if depth >= min(alpha * t, beta * cutoff_m(yv)):
                mass += abs(w)
        val = mass / gamma_ball(B)
        table.append({"ball": B, "value": val})
        if val > best:
            best, witness = val, B
    return {"norm": best, "witness_ball": witness, "per_ball": table}


def check_carleson_pairing(mu: DiscreteMeasure, f: GridFunction, alpha: float,
                           beta: float, delta: float,
                           dict_: BallDictionary) -> dict:
    """Measured constant in  sum |w||f| <= C ||mu||_C ||f||_{T^{1,inf}}."""
    lhs = sum(abs(w) * abs(f.values[f.grid.nearest_spatial_index(y),
                                    f.grid.nearest_t_index(t)])
              for y, t, w in mu.points)
    cn = carleson_norm(mu, alpha, beta, delta, dict_)
    fnorm = tent_norm(f, ExponentPair(1.0, np.inf), alpha, beta,
                      continuous_intent=True)
    rhs = cn["norm"] * fnorm
    return {
        "lhs": float(lhs),
        "carleson_norm": cn["norm"],
        "tent_norm_1inf": fnorm,
        "C_emp": float(lhs) / rhs if rhs > 0 else (0.0 if lhs == 0 else np.inf),
        "vacuous": rhs == 0 and lhs == 0,
    }


def measured_K_beta(alpha: float, beta: float, dict_: BallDictionary) -> float:
    """Inflation constant: sup gamma(kappa B~)/gamma(B~) over dictionary
    balls, with B~ = B(c, alpha r ^ beta m(c)) and kappa = 2(beta+1)^2 + 1."""
    kappa = 2.0 * (beta + 1.0) ** 2 + 1.0
    worst = 1.0
    for B in dict_.balls:
        r = min(alpha * B.radius, beta * cutoff_m(B.center_array))
        if r <= 0:
            continue
        Bt = Ball(B.center, r)
        worst = max(worst, gamma_ball(Bt.scaled(kappa)) / gamma_ball(Bt))
    return worst


def stopping_density(h: SpatialFunction, alpha: float, beta: float,
                     dict_: BallDictionary) -> dict:
    """Per ball: gamma-fraction of B(c, alpha r ^ beta m(c)) where the
    stopping time reaches r_B.  Grid-sum gammas keep the ratio exact."""
    g = h.grid
    gw = g.gamma_y
    rows = []
    lam_min = 1.0
    for B in dict_.balls:
        r_adm = min(alpha * B.radius, beta * cutoff_m(B.center_array))
        inside = np.linalg.norm(g.points - B.center_array, axis=1) < r_adm
        den = gw[inside].sum()
        if den == 0.0:
            continue
        lam = float(gw[inside & (h.values >= B.radius)].sum() / den)
        rows.append({"ball": B, "lambda_M": lam})
        lam_min = min(lam_min, lam)
    return {"per_ball": rows, "lambda_M_min": lam_min if rows else np.nan}


def check_duality_1q(f: GridFunction, g: GridFunction, q: float,
                     spec: ConeSpec, dict_: BallDictionary,
                     h_ladder=None) -> dict:
    """Measured constant in  iint |fg| <= C int S_q f * C_{q'} g dgamma,
    plus the stopping-time intermediates of the proof route."""
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    qp = q / (q - 1.0)
    lhs = pairing(GridFunction(f.grid, np.abs(f.values)),
                  GridFunction(g.grid, np.abs(g.values)))
    Sf = area_S(f, q, spec)
    Cg = carleson_C(g, qp, spec.alpha, spec.beta, dict_)
    rhs = float(np.sum(Sf.values * Cg.values * f.grid.gamma_y))
    K = measured_K_beta(spec.alpha, spec.beta, dict_)
    M = 2.0 * K ** (1.0 / qp)
    if h_ladder is None:
        h_ladder = np.geomspace(f.grid.t_min, f.grid.t_max, 16)
    h = stopping_time(g, qp, spec, M, h_ladder, Cg)
    dens = stopping_density(h, spec.alpha, spec.beta, dict_)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "C_emp": lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else np.inf),
        "vacuous": rhs == 0 and lhs == 0,
        "K_beta": K,
        "M_const": M,
        "lambda_M_guarantee": 1.0 - 2.0 ** (-qp),
        "lambda_M_min": dens["lambda_M_min"],
    }


def check_duality_pq(f: GridFunction, g: GridFunction, p: float, q: float,
                     spec: ConeSpec, eps: float = 1e-6) -> dict:
    """The three-layer conjugate-exponent chain, each layer asserted.

    Layer 0 (identity, 1e-12): iint|fg| equals its cone-average
    rearrangement.  Layer 1: <= int S_q f S_{q'} g dgamma.  Layer 2: <=
    ||f||_{T^{p,q}} ||g||_{T^{p',q'}}.  eps is the relative slack on the
    inequality layers.
    """
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    if not (1.0 < p < np.inf and 1.0 < q < np.inf):
        raise ValueError("need 1 < p, q < inf")
    pp, qp = p / (p - 1.0), q / (q - 1.0)
    absfg = GridFunction(f.grid, np.abs(f.values * g.values))
    lhs = halfspace_integral(absfg)
    rearranged = _cone_average_over(np.ones(f.grid.n_spatial), absfg, spec)
    Sf = area_S(f, q, spec)
    Sg = area_S(g, qp, spec)
    mid = float(np.sum(Sf.values * Sg.values * f.grid.gamma_y))
    right = (tent_norm(f, ExponentPair(p, q), spec.alpha, spec.beta)
             * tent_norm(g, ExponentPair(pp, qp), spec.alpha, spec.beta))
    scale = max(lhs, mid, right, 1e-300)
    return {
        "lhs": lhs,
        "rearranged": rearranged,
        "mid": mid,
        "right": right,
        "identity_ok": bool(abs(lhs - rearranged) <= 1e-12 * max(lhs, 1e-300)),
        "holder1_ok": bool(lhs <= mid + eps * scale),
        "holder2_ok": bool(mid <= right + eps * scale),
    }

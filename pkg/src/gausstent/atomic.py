"""Atoms and the constructive atomic decomposition.

An atom at exponent q is supported in the tent over an admissible ball B
and normalized by ||a||_{L^q(dgamma dt/t)} <= gamma(B)^{-(1-1/q)} (sup-norm
bound gamma(B)^{-1} at q = inf); its area function then has L^1(gamma) norm
at most 1.

The decomposition follows the level-set pipeline: level sets O_k of the
area function, density-point inflation O_k -> O_k^{[etabar]}, Whitney cubes
of the inflated sets, cube-centered balls large enough that the shrunken
tent of O_k^{[etabar]} restricted to a cube column lies inside the tent of
the ball, and one atom per (level, cube) piece.  On the grid the ball radius
is the prescribed multiple of the cube diameter, enlarged when necessary by
the measured cube-to-complement distance (plus one cell) so that the tent
inclusion holds node-exactly and the reconstruction is exact with zero
residual.  The q = inf path uses Vitali-type ball covers of the level sets
and a piecewise-linear partition of unity instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Ball, ConeSpec, cutoff_m, gamma_ball
from .grid import GridFunction, RegionMask, halfspace_integral
from .functionals import area_S, area_S_sup, cone_caps, default_dictionary
from .grid import lp_gamma_norm
from .whitney import (
    complement_distance,
    cube_center,
    density_points,
    doubling_constant,
    etabar_from_doubling,
    tent_mask,
    whitney_balls,
    whitney_cubes,
)
from . import grid as gridio

__all__ = [
    "Atom",
    "Decomposition",
    "coefficient_report",
    "decompose",
    "decompose_sup",
    "export_decomposition",
    "import_decomposition",
    "reconstruct",
    "validate_atom",
]


@dataclass
class Atom:
    """A grid function with its certifying ball and exponent."""

    values: GridFunction
    ball: Ball
    q: float
    delta: float                      # realized admissibility level r_B/m(c_B)
    certificates: dict = field(default_factory=dict)


@dataclass
class Decomposition:
    terms: list                        # [(lambda, Atom), ...]
    source_norm: float
    q: float
    spec: ConeSpec
    diagnostics: list = field(default_factory=list)
    residual_mass: float = 0.0
    audit: dict = field(default_factory=dict)


def _lq_halfspace_norm(f: GridFunction, q: float) -> float:
    if q == np.inf:
        return float(np.max(np.abs(f.values)))
    return halfspace_integral(GridFunction(f.grid, np.abs(f.values) ** q)) ** (1.0 / q)


def validate_atom(a: Atom, spec: ConeSpec, lemma_slack: float = 0.05) -> dict:
    """Three checks: tent support, the normalization bound, and the
    L^1(gamma) bound on the area function of the atom."""
    g = a.values.grid
    caps = cone_caps(g, spec)
    dist_c = np.linalg.norm(g.points - a.ball.center_array, axis=1)
    depth = np.maximum(a.ball.radius - dist_c, 0.0)
    in_tent = depth[:, None] >= caps
    nz = a.values.values != 0.0
    support_ok = bool(not np.any(nz & ~in_tent))

    gB = gamma_ball(a.ball)
    if a.q == np.inf:
        norm_value = float(np.max(np.abs(a.values.values)))
        norm_bound = 1.0 / gB
        S = area_S_sup(a.values, spec)
    else:
        norm_value = _lq_halfspace_norm(a.values, a.q)
        norm_bound = gB ** (-(1.0 - 1.0 / a.q))
        S = area_S(a.values, a.q, spec)
    norm_ok = bool(norm_value <= norm_bound * (1.0 + 1e-9))
    s_l1 = lp_gamma_norm(S, 1)
    area_ok = bool(s_l1 <= 1.0 + lemma_slack)
    return {
        "support_ok": support_ok,
        "norm_ok": norm_ok,
        "area_l1_ok": area_ok,
        "norm_value": norm_value,
        "norm_bound": norm_bound,
        "area_l1": s_l1,
        "all_ok": support_ok and norm_ok and area_ok,
    }


def _level_range(positive_values: np.ndarray, k_range=None):
    if k_range is not None:
        return int(k_range[0]), int(k_range[1])
    kmin = int(np.floor(np.log2(positive_values.min()))) - 1
    kmax = int(np.ceil(np.log2(positive_values.max())))
    return kmin, kmax


def decompose(f: GridFunction, q: float, spec: ConeSpec,
              eta: float = 0.5, k_range=None) -> Decomposition:
    """Atomic decomposition of f in the T^{1,q} scale, q < inf."""
    if not (1.0 <= q < np.inf):
        raise ValueError("q must lie in [1, inf)")
    if not (0.0 < eta < 1.0):
        raise ValueError("eta must lie in (0, 1)")
    g = f.grid
    qprime_exp = 1.0 - 1.0 / q          # gamma(B)^{1/q'} exponent
    S = area_S(f, q, spec)
    source_norm = lp_gamma_norm(S, 1)
    pos = S.values[S.values > 0]
    if pos.size == 0:
        return Decomposition([], 0.0, q, spec)
    kmin, kmax = _level_range(pos, k_range)

    lam = spec.beta * (1.0 + spec.beta)
    C_doub = doubling_constant(g, lam, default_dictionary(g, lam))
    etabar = etabar_from_doubling(C_doub)
    C_inflate = 1.0 + 5.0 / (1.0 - eta)

    # inflated level sets O_k^[etabar], complement of the density points of F_k
    inflated = {}
    for k in range(kmin, kmax + 2):
        Ok = S.values > 2.0 ** k
        if not Ok.any():
            inflated[k] = RegionMask(g, np.zeros(g.n_spatial, dtype=bool))
        else:
            Fk = RegionMask(g, ~Ok)
            inflated[k] = density_points(Fk, etabar, lam).complement()

    nesting_ok = all(
        not np.any(inflated[k + 1].mask & ~inflated[k].mask)
        for k in range(kmin, kmax + 1)
    )

    shrink = 1.0 - eta
    tents = {k: (tent_mask(inflated[k], spec.alpha, spec.beta, shrink).mask
                 if inflated[k].mask.any()
                 else np.zeros((g.n_spatial, g.nt), dtype=bool))
             for k in range(kmin, kmax + 2)}

    caps = cone_caps(g, spec)
    weights = g.gamma_y[:, None] * g.wt[None, :]
    cell = g.cell
    assigned = np.zeros((g.n_spatial, g.nt), dtype=bool)
    terms = []
    diagnostics = []
    mu_bound_worst = 0.0

    for k in range(kmin, kmax + 1):
        Oke = inflated[k]
        if not Oke.mask.any():
            continue
        band = tents[k] & ~tents[k + 1]
        cover = whitney_cubes(Oke)
        diagnostics.append({
            "k": k,
            "level_set_gamma": float(g.gamma_y[S.values > 2.0 ** k].sum()),
            "inflated_gamma": float(g.gamma_y[Oke.mask].sum()),
            "n_cubes": len(cover.cubes),
        })
        for cube, nodes, dist_q in zip(cover.cubes, cover.cube_nodes, cover.cube_dist):
            d_j = 2.0 ** (-cube.level) * np.sqrt(g.n)
            c_j = cube_center(cube, g)
            # prescribed inflation, enlarged so the measured column distances
            # fit inside the ball tent node-exactly
            r_j = max(C_inflate * d_j, d_j + (dist_q + d_j) / shrink) + cell * 1e-9
            B_j = Ball(tuple(c_j), r_j)
            depth = np.maximum(r_j - np.linalg.norm(g.points[nodes] - c_j, axis=1), 0.0)
            piece = band[nodes] & (depth[:, None] >= caps[nodes])
            vals = f.values[nodes] * piece
            mu = float(np.sum(np.abs(vals) ** q * weights[nodes]))
            assigned[nodes] |= piece
            if mu == 0.0:
                continue
            gB = gamma_ball(B_j)
            lam_jk = gB ** qprime_exp * mu ** (1.0 / q)
            avals = np.zeros_like(f.values)
            avals[nodes] = vals / lam_jk
            atom = Atom(GridFunction(g, avals), B_j, q,
                        delta=r_j / cutoff_m(c_j),
                        certificates={"k": k, "mu": mu})
            terms.append((lam_jk, atom))
            mu_bound_worst = max(mu_bound_worst, mu / (gB * 2.0 ** (q * k)))

    supp = f.values != 0.0
    total_q = float(np.sum(np.abs(f.values) ** q * weights))
    resid_q = float(np.sum(np.abs(f.values[supp & ~assigned]) ** q
                           * weights[supp & ~assigned]))
    residual = resid_q / total_q if total_q > 0 else 0.0
    return Decomposition(
        terms, source_norm, q, spec, diagnostics, residual,
        audit={"nesting_ok": nesting_ok, "etabar": etabar,
               "doubling_constant": C_doub, "C_inflate": C_inflate,
               "mu_over_gamma_2qk_max": mu_bound_worst,
               "k_range": (kmin, kmax)},
    )


def decompose_sup(f: GridFunction, spec: ConeSpec, k_range=None,
                  C_overlap: float = 2.0) -> Decomposition:
    """Atomic decomposition at q = inf (continuous-intent values).

    Level sets come from the sup area function, covers are Vitali-type
    Whitney balls, and overlapping pieces are split by a piecewise-linear
    partition of unity (hat weight r_j - |y - c_j| on each ball, normalized
    to sum to one wherever f is nonzero in the band).
    """
    g = f.grid
    S = area_S_sup(f, spec)
    absf = np.abs(f.values)
    source_norm = lp_gamma_norm(S, 1)
    pos = absf[absf > 0]
    if pos.size == 0:
        return Decomposition([], 0.0, np.inf, spec)
    kmin, kmax = _level_range(pos, k_range)
    C = float(C_overlap)
    star = 2.0 * C + 3.0

    level_masks = {k: RegionMask(g, S.values > 2.0 ** k)
                   for k in range(kmin, kmax + 2)}
    tents = {k: (tent_mask(level_masks[k], spec.alpha, spec.beta).mask
                 if level_masks[k].mask.any()
                 else np.zeros((g.n_spatial, g.nt), dtype=bool))
             for k in range(kmin, kmax + 2)}

    terms = []
    diagnostics = []
    partition_defect = 0.0
    assigned = np.zeros((g.n_spatial, g.nt), dtype=bool)

    for k in range(kmin, kmax + 1):
        Ok = level_masks[k]
        if not Ok.mask.any():
            continue
        band = tents[k] & ~tents[k + 1]
        cover = whitney_balls(Ok, C)
        diagnostics.append({
            "k": k,
            "level_set_gamma": float(g.gamma_y[Ok.mask].sum()),
            "n_balls": len(cover.balls),
        })
        hats = []
        for B_j in cover.balls:
            w = np.maximum(B_j.radius - np.linalg.norm(g.points - B_j.center_array,
                                                       axis=1), 0.0)
            hats.append(w)
        hat_total = np.sum(hats, axis=0)
        relevant = band & (absf > 0)
        phi_sum = np.zeros(g.n_spatial)
        for B_j, w in zip(cover.balls, hats):
            phi = np.where(hat_total > 0, w / np.where(hat_total > 0, hat_total, 1.0), 0.0)
            phi_sum += phi
            piece = relevant & (phi[:, None] > 0)
            if not piece.any():
                continue
            mu = 2.0 ** (k + 1) * gamma_ball(B_j.scaled(star))
            avals = np.where(piece, f.values * phi[:, None] / mu, 0.0)
            assigned |= piece
            B_star = B_j.scaled(star)
            atom = Atom(GridFunction(g, avals), B_star, np.inf,
                        delta=B_star.radius / cutoff_m(B_star.center_array),
                        certificates={"k": k, "mu": mu, "phi_max": float(phi.max())})
            terms.append((mu, atom))
        active = relevant.any(axis=1) & (hat_total > 0)
        if active.any():
            partition_defect = max(partition_defect,
                                   float(np.max(np.abs(phi_sum[active] - 1.0))))

    supp = absf > 0
    weights = g.gamma_y[:, None] * g.wt[None, :]
    total = float(np.sum(absf * weights))
    resid = float(np.sum(absf[supp & ~assigned] * weights[supp & ~assigned]))
    return Decomposition(
        terms, source_norm, np.inf, spec, diagnostics,
        residual_mass=resid / total if total > 0 else 0.0,
        audit={"C_overlap": C, "inflation_factor": star,
               "k_range": (kmin, kmax),
               "partition_defect": partition_defect},
    )


def reconstruct(d: Decomposition) -> GridFunction:
    """Sum of lambda * atom over the decomposition."""
    if not d.terms:
        raise ValueError("empty decomposition has no grid to reconstruct on")
    g = d.terms[0][1].values.grid
    total = np.zeros_like(d.terms[0][1].values.values)
    for lam, atom in d.terms:
        if atom.values.grid != g:
            raise ValueError("grid mismatch among atoms")
        total = total + lam * atom.values.values
    return GridFunction(g, total)


def coefficient_report(d: Decomposition) -> dict:
    total = float(sum(abs(lam) for lam, _ in d.terms))
    ratio = 0.0 if not d.terms else (total / d.source_norm
                                     if d.source_norm > 0 else np.inf)
    return {
        "sum_abs_lambda": total,
        "source_norm": d.source_norm,
        "ratio": ratio,
        "n_atoms": len(d.terms),
        "residual_mass": d.residual_mass,
    }


# -- export / import -------------------------------------------------------


def export_decomposition(d: Decomposition, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (lam, atom) in enumerate(d.terms):
        fname = f"atom_{i:04d}.gtnt"
        gridio.write_grid_function(atom.values, out / fname)
        entries.append({
            "lambda": lam,
            "ball": {"center": list(atom.ball.center), "radius": atom.ball.radius},
            "q": "inf" if atom.q == np.inf else atom.q,
            "delta": atom.delta,
            "atom_file": fname,
        })
    manifest = {
        "source_norm": d.source_norm,
        "q": "inf" if d.q == np.inf else d.q,
        "alpha": d.spec.alpha,
        "beta": d.spec.beta,
        "residual_mass": d.residual_mass,
        "diagnostics": d.diagnostics,
        "audit": d.audit,
        "terms": entries,
    }
    path = out / "decomposition.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def import_decomposition(manifest_path) -> Decomposition:
    path = Path(manifest_path)
    data = json.loads(path.read_text())
    spec = ConeSpec(data["alpha"], data["beta"])
    q = np.inf if data["q"] == "inf" else float(data["q"])
    terms = []
    for entry in data["terms"]:
        gf = gridio.read_grid_function(path.parent / entry["atom_file"])
        ball = Ball(tuple(entry["ball"]["center"]), entry["ball"]["radius"])
        aq = np.inf if entry["q"] == "inf" else float(entry["q"])
        terms.append((entry["lambda"], Atom(gf, ball, aq, entry["delta"])))
    return Decomposition(terms, data["source_norm"], q, spec,
                         data.get("diagnostics", []),
                         data.get("residual_mass", 0.0),
                         data.get("audit", {}))

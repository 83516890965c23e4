"""The local convolution operator and the H^1-atom checks, n = 1.

The operator maps a half-space function to a spatial function by

    u(x) = e^{x^2} sum_{t_j} sum_{y_i : t_j < m(y_i)}
               f(y_i, t_j) phi((x - y_i)/t_j)/t_j e^{-y_i^2} w_y w_{log t}

with a fixed odd mother function phi supported in [-1, 1].  The local
region {t < m(y)} forces t < 1, so the t-sum stops there.  The mean-zero
property of phi is what makes gamma-averages of u vanish; to keep that
property exact under quadrature, the discrete kernel column for each
(y, t) node is recentered within its own support (a constant is subtracted
over {|x - y| < t} so the weighted column sums to zero exactly).  The
correction is O(cell/t) relative and vanishes under refinement.

e^{x^2} stays below e^{64} on the default box, comfortably inside double
range; no log-space evaluation is needed for any supported box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .grid import GridFunction, SpatialFunction, lp_gamma_norm
from .geometry import gamma_ball

__all__ = ["MotherFunction", "check_h1_atom", "default_phi", "pi_phi"]


@dataclass(frozen=True)
class MotherFunction:
    """Odd smooth bump c*x*exp(-1/(1-x^2)) on (-1, 1), scaled to peak 1."""

    scale: float
    bound: float        # M with |phi| <= M and |phi'| <= M

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        inside = np.abs(x) < 1.0
        xi = x[inside]
        with np.errstate(over="ignore"):
            out[inside] = self.scale * xi * np.exp(-1.0 / (1.0 - xi * xi))
        return out


def default_phi() -> MotherFunction:
    res = minimize_scalar(lambda x: -x * np.exp(-1.0 / (1.0 - x * x)),
                          bounds=(1e-6, 1.0 - 1e-6), method="bounded")
    peak = -res.fun
    phi = MotherFunction(scale=1.0 / peak, bound=1.0)
    xs = np.linspace(-0.9999, 0.9999, 20001)
    deriv = np.max(np.abs(np.gradient(phi(xs), xs)))
    return MotherFunction(scale=phi.scale, bound=float(max(1.0, deriv)))


def pi_phi(f: GridFunction, phi: MotherFunction, local: bool = True) -> SpatialFunction:
    """Apply the operator; local=False drops the {t < m(y)} truncation.

    The untruncated variant exists only as a deliberate-bug sentinel for the
    support check; all mathematical guarantees assume local=True.
    """
    g = f.grid
    if g.n != 1:
        raise ValueError("the embedding operator is implemented for n = 1 only")
    y = g.points[:, 0]
    x = y  # output vertices are the spatial nodes
    gw = g.gamma_y
    acc = np.zeros(g.n_spatial)
    for j, tj in enumerate(g.t):
        rows = np.nonzero(f.values[:, j])[0]
        if local:
            rows = rows[tj < g.m_y[rows]]
        if rows.size == 0:
            continue
        kernel = phi((x[None, :] - y[rows, None]) / tj) / tj   # (rows, x)
        # recenter each row inside its support so the weighted row sum is 0
        support = np.abs(x[None, :] - y[rows, None]) < tj
        wsum = (kernel * g.wy[None, :]).sum(axis=1)
        wtot = (support * g.wy[None, :]).sum(axis=1)
        kernel = kernel - support * (wsum / wtot)[:, None]
        coeff = f.values[rows, j] * gw[rows] * g.wt[j]
        acc += coeff @ kernel
    return SpatialFunction(g, acc * np.exp(x * x))


def check_h1_atom(atom, phi: MotherFunction, local: bool = True) -> dict:
    """Three checks on u = pi_phi(atom): support inside the doubled ball,
    vanishing gamma-average, and the L^2(gamma) bound constant."""
    f = atom.values
    g = f.grid
    u = pi_phi(f, phi, local=local)
    cell = g.cell
    dist_c = np.abs(g.points[:, 0] - atom.ball.center[0])
    outside = dist_c >= 2.0 * atom.ball.radius + cell
    support_ok = bool(np.all(u.values[outside] == 0.0))

    avg = float(np.sum(u.values * g.gamma_y))
    l1 = lp_gamma_norm(u, 1)
    if l1 > 0:
        average_ok = bool(abs(avg) <= 1e-8 * l1)
    else:
        average_ok = bool(abs(avg) <= 1e-12)

    l2 = lp_gamma_norm(u, 2)
    c_emp = l2 * np.sqrt(gamma_ball(atom.ball))
    return {
        "support_ok": support_ok,
        "average_ok": average_ok,
        "gamma_average": avg,
        "l1_norm": l1,
        "l2_norm": l2,
        "l2_constant": c_emp,
        "all_ok": support_ok and average_ok and np.isfinite(c_emp),
    }

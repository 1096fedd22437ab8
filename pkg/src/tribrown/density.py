"""Brown-measure densities and Fuglede–Kadison determinants.

Densities (all at most 1/(π t_eff), zero outside the closure of the domain):

* circular at time t, on Ξ_t, evaluated at w = w(0;λ,t):
    ρ = (1/π)( |φ((λ−x0)h⁻²)|²/φ(h⁻²) + w²·φ(h⁻¹k⁻¹) )
* regularized circular (ε > 0), positive on all of ℂ, at w = w(ε;λ,t), with
  the first denominator enlarged to φ(h⁻²) + ε/(2 t w³);
* triangular (α ≠ β), same assembly at s = s(λ), which solves the circular
  equation at t_eff — the two densities agree pointwise.

The determinant Δ(x0 + c_t − λ) is exp(½(φ(log h(λ,w)) − w²/t)) on Ξ_t and
Δ(x0 − λ) outside; a node exactly at λ outside the domain makes it 0, which
is reported with a degenerate flag instead of an error.

Off the domain closure the unregularized density is reported as 0 even where
the spectral measure of x0 itself carries mass; only the absolutely
continuous part given by the closed formulas is evaluated.
"""

import json
import numpy as np

from .models import (
    ATOM_TOL,
    NumericalFailure,
    hinv0_grid,
    logdet_grid,
    trace_bundle,
    trace_bundle_grid,
)
from .subordination import (
    EllipticParams,
    solve_s,
    solve_w0,
    solve_w0_grid,
    solve_w_reg,
    solve_w_reg_grid,
)

_INV_PI = 1.0 / np.pi


def _assemble(tb, s, extra_den=0.0):
    """(1/π)(|cross|²/(h_inv_sq + extra_den) + s²·hk_inv)."""
    num = tb.cross.real * tb.cross.real + tb.cross.imag * tb.cross.imag
    return _INV_PI * (num / (tb.h_inv_sq + extra_den) + (s * s) * tb.hk_inv)


def density_circ(model, lam, t):
    """Brown-measure density of x0 + c_t at λ (0 outside Ξ_t)."""
    w, inside = solve_w0(model, lam, t)
    if not inside:
        return 0.0
    return float(_assemble(trace_bundle(model, lam, w), w))


def density_circ_reg(model, lam, t, eps):
    """Regularized density at λ; strictly inside (0, 1/(πt)) for ε > 0."""
    w = solve_w_reg(model, lam, t, eps)
    tb = trace_bundle(model, lam, w)
    return float(_assemble(tb, w, extra_den=eps / (2.0 * t * w**3)))


def density_tri(model, lam, alpha, beta):
    """Brown-measure density of x0 + g_{αβ,0} at λ (α ≠ β)."""
    if float(alpha) == float(beta):
        raise ValueError("density_tri requires alpha != beta; use density_circ")
    params = EllipticParams(alpha, beta)
    s = solve_s(model, lam, params)
    if s == 0.0:
        return 0.0
    return float(_assemble(trace_bundle(model, lam, s), s))


def fk_determinant(model, lam, t):
    """(Δ(x0 + c_t − λ), degenerate) — degenerate means a node of x0 sits
    exactly at λ outside the domain, forcing Δ = 0."""
    t = float(t)
    if not (t > 0.0 and np.isfinite(t)):
        raise ValueError(f"t must be positive, got {t!r}")
    lam = complex(lam)
    lr, li = np.array([lam.real]), np.array([lam.imag])
    w, inside = solve_w0_grid(model, lr, li, t)
    if bool(inside[0]):
        ld = float(logdet_grid(model, lr, li, w)[0])
        return float(np.exp(0.5 * (ld - w[0] * w[0] / t))), False
    _, mind2 = hinv0_grid(model, lr, li)
    ld = float(logdet_grid(model, lr, li, np.array([0.0]))[0])
    if mind2[0] <= ATOM_TOL * ATOM_TOL or ld == -np.inf:
        return 0.0, True
    return float(np.exp(0.5 * ld)), False


def fkdet_grid(model, lr, li, t, d2=None, backend=None):
    """Δ per cell over flat cell arrays; returns (values, degenerate mask)."""
    if model.is_matrix and d2 is None:
        d2 = model.d2_rows(lr, li)
    w, _ = solve_w0_grid(model, lr, li, t, d2=d2, backend=backend)
    ld = logdet_grid(model, lr, li, w, d2=d2, backend=backend)
    with np.errstate(invalid="ignore"):
        val = np.exp(0.5 * (ld - w * w / t))
    degenerate = np.isneginf(ld)
    if degenerate.any():
        val = np.where(degenerate, 0.0, val)
    return val, degenerate


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


class DensityGrid:
    """Square-celled density samples over a rectangle.

    ``values[iy, ix]`` is the density at the cell center
    (x_min + (ix+0.5)·dx, y_min + (iy+0.5)·dy); ``mass`` is the midpoint-rule
    integral Σ values · dx · dy.
    """

    __slots__ = ("x_min", "x_max", "y_min", "y_max", "nx", "ny", "values",
                 "params", "epsilon", "kind")

    def __init__(self, bounds, nx, ny, values, params, epsilon, kind):
        self.x_min, self.x_max, self.y_min, self.y_max = map(float, bounds)
        self.nx = int(nx)
        self.ny = int(ny)
        self.values = values
        self.params = params
        self.epsilon = float(epsilon)
        self.kind = kind

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.nx

    @property
    def dy(self):
        return (self.y_max - self.y_min) / self.ny

    @property
    def x_centers(self):
        return self.x_min + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def y_centers(self):
        return self.y_min + (np.arange(self.ny) + 0.5) * self.dy

    @property
    def mass(self):
        return float(self.values.sum() * self.dx * self.dy)

    def cells(self):
        """Flat (lr, li) arrays of cell centers, x varying fastest."""
        return np.tile(self.x_centers, self.ny), np.repeat(self.y_centers, self.nx)

    def write_csv(self, path, column="density"):
        xs = self.x_centers
        ys = self.y_centers
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"x,y,{column}\n")
            for iy in range(self.ny):
                row = self.values[iy]
                y = ys[iy]
                for ix in range(self.nx):
                    fh.write(f"{xs[ix]:.17g},{y:.17g},{row[ix]:.17g}\n")
        meta = {
            "x_min": self.x_min,
            "x_max": self.x_max,
            "y_min": self.y_min,
            "y_max": self.y_max,
            "nx": self.nx,
            "ny": self.ny,
            "alpha": self.params.alpha if self.params is not None else None,
            "beta": self.params.beta if self.params is not None else None,
            "gamma_re": self.params.gamma.real if self.params is not None else None,
            "gamma_im": self.params.gamma.imag if self.params is not None else None,
            "epsilon": self.epsilon,
            "kind": self.kind,
            "mass": self.mass,
        }
        with open(f"{path}.meta.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _check_finite(values, inside, lr, li):
    bad = ~np.isfinite(values)
    if inside is not None:
        bad &= inside
    if bad.any():
        c = int(np.argmax(bad))
        raise NumericalFailure(
            "density evaluation failed", lam=complex(lr[c], li[c])
        )


def density_flat(model, t, eps, lr, li, backend=None):
    """Density values at arbitrary flat points: regularized circular at time t
    when ε > 0, circular otherwise (0 off the domain)."""
    d2 = model.d2_rows(lr, li) if model.is_matrix else None
    if eps > 0.0:
        w = solve_w_reg_grid(model, lr, li, t, eps, d2=d2, backend=backend)
        tb = trace_bundle_grid(model, lr, li, w, d2=d2, backend=backend)
        with np.errstate(invalid="ignore"):
            vals = _assemble(tb, w, extra_den=eps / (2.0 * t * w**3))
        _check_finite(vals, None, lr, li)
        return vals
    w, inside = solve_w0_grid(model, lr, li, t, d2=d2, backend=backend)
    tb = trace_bundle_grid(model, lr, li, w, d2=d2, backend=backend)
    with np.errstate(invalid="ignore"):
        vals = _assemble(tb, w)
    _check_finite(vals, inside, lr, li)
    return np.where(inside, vals, 0.0)


def fill_grid(model, params, eps, bounds, nx, ny, backend=None):
    """DensityGrid of the appropriate density: regularized circular at t_eff
    when ε > 0, triangular when ε = 0 and α ≠ β, circular otherwise."""
    nx, ny = int(nx), int(ny)
    if nx < 2 or ny < 2:
        raise ValueError("grid needs nx, ny >= 2")
    bounds = tuple(map(float, bounds))
    if not all(np.isfinite(b) for b in bounds):
        raise ValueError(f"non-finite bounds {bounds!r}")
    if bounds[1] <= bounds[0] or bounds[3] <= bounds[2]:
        raise ValueError(f"empty bounds {bounds!r}")
    eps = float(eps)
    if eps < 0.0 or not np.isfinite(eps):
        raise ValueError(f"eps must be >= 0, got {eps!r}")
    if eps > 0.0:
        kind = "circ_reg"
    elif params.is_circular:
        kind = "circ"
    else:
        kind = "tri"
    grid = DensityGrid(bounds, nx, ny, None, params, eps, kind)
    lr, li = grid.cells()
    vals = density_flat(model, params.t_eff, eps, lr, li, backend=backend)
    grid.values = vals.reshape(ny, nx)
    return grid


def domain_grid(model, params, bounds, nx, ny, backend=None):
    """DensityGrid whose values are the 0/1 indicator of the open domain Ξ."""
    nx, ny = int(nx), int(ny)
    if nx < 2 or ny < 2:
        raise ValueError("grid needs nx, ny >= 2")
    grid = DensityGrid(tuple(map(float, bounds)), nx, ny, None, params, 0.0, "domain")
    lr, li = grid.cells()
    acc, _ = hinv0_grid(model, lr, li, backend=backend)
    grid.values = (acc > params.threshold).astype(np.float64).reshape(ny, nx)
    return grid


def fkdet_density_grid(model, t, bounds, nx, ny, backend=None):
    """DensityGrid carrying Δ(x0 + c_t − λ) values (for the fkdet export)."""
    nx, ny = int(nx), int(ny)
    if nx < 2 or ny < 2:
        raise ValueError("grid needs nx, ny >= 2")
    params = EllipticParams.from_t(t)
    grid = DensityGrid(tuple(map(float, bounds)), nx, ny, None, params, 0.0, "fkdet")
    lr, li = grid.cells()
    val, _ = fkdet_grid(model, lr, li, t, backend=backend)
    grid.values = val.reshape(ny, nx)
    return grid

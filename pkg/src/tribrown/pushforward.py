"""Push-forward maps transporting the γ = 0 Brown measure to the γ-deformed one.

The map is Φ(λ) = λ + γ·φ((λ−x0)* k(λ, s*)⁻¹) where the scale s* is, per λ:

* ε = 0: the boundary scale s(λ) = w(0; λ, t_eff) (zero off the domain, where
  the map degenerates to a node sum at s = 0);
* ε > 0, α = β: the regularized circular scale w(ε; λ, t);
* ε > 0, α ≠ β: ε₀(λ, ε) from the triangular σ-system.

For ε > 0 the map is a homeomorphism of ℂ; its inverse is found numerically
(damped fixed point with a finite-difference Newton fallback) because the
closed-form inverse needs resolvent traces of the very operator whose
distribution is being computed.

Transport moves each source cell's mass (value × cell area) to Φ(center) and
accumulates onto target bins — mass bookkeeping, not change of variables, so
it stays well defined where Φ is singular.
"""

import json
import numpy as np

from .backend import kernels
from .models import NumericalFailure, trace_bundle_grid
from .subordination import (
    eps0_from_sigma,
    in_xi_grid,
    solve_sigma_grid,
    solve_w0_grid,
    solve_w_reg_grid,
)
from .density import DensityGrid

#: |det| below this flags a singular point in jacobian()
JACOBIAN_SINGULAR_TOL = 1e-8
#: |det| threshold for singular_scan cells
SCAN_DET_TOL = 1e-6
#: relative inversion tolerance |phi(λ) − z| ≤ tol·max(1,|z|)
INVERSE_TOL = 1e-10

_FD_STEP_REL = 1e-5


class LostMassError(NumericalFailure):
    """Transport clipped more than the allowed fraction of mass."""


class PushforwardMap:
    """Φ for a model and parameters (γ taken from ``params``).

    ``kind`` is "triangular" (α ≠ β) or "elliptic" (α = β); by default it
    follows the parameters.  ε ≥ 0 selects the regularized map.
    """

    __slots__ = ("model", "params", "eps", "kind")

    def __init__(self, model, params, eps=0.0, kind=None):
        eps = float(eps)
        if eps < 0.0 or not np.isfinite(eps):
            raise ValueError(f"eps must be >= 0, got {eps!r}")
        auto = "elliptic" if params.is_circular else "triangular"
        if kind is None:
            kind = auto
        if kind not in ("triangular", "elliptic"):
            raise ValueError(f"unknown map kind {kind!r}")
        if kind != auto:
            raise ValueError(
                f"kind {kind!r} inconsistent with alpha/beta (expected {auto!r})"
            )
        self.model = model
        self.params = params
        self.eps = eps
        self.kind = kind

    # -- map evaluation ----------------------------------------------------

    def _scale_grid(self, lr, li, d2=None, backend=None):
        p = self.params
        if self.eps == 0.0:
            return solve_w0_grid(self.model, lr, li, p.t_eff, d2=d2, backend=backend)[0]
        if p.is_circular:
            return solve_w_reg_grid(
                self.model, lr, li, p.t_eff, self.eps, d2=d2, backend=backend
            )
        sig = solve_sigma_grid(
            self.model, lr, li, p.alpha, p.beta, self.eps, d2=d2, backend=backend
        )
        return eps0_from_sigma(p.alpha, p.beta, self.eps, sig)

    def phi_grid(self, lr, li, d2=None, backend=None):
        """Φ at flat cell arrays; complex array."""
        lam = lr + 1j * li
        if self.params.gamma == 0:
            return lam
        if self.model.is_matrix and d2 is None:
            d2 = self.model.d2_rows(lr, li)
        s = self._scale_grid(lr, li, d2=d2, backend=backend)
        tb = trace_bundle_grid(self.model, lr, li, s, d2=d2, backend=backend)
        out = lam + self.params.gamma * tb.p0
        bad = ~np.isfinite(out)
        if bad.any():
            c = int(np.argmax(bad))
            raise NumericalFailure(
                "push-forward map undefined (node of x0 at λ with s = 0)",
                lam=complex(lr[c], li[c]),
            )
        return out

    def phi(self, lam):
        """Φ(λ) for one λ."""
        lam = complex(lam)
        return complex(
            self.phi_grid(np.array([lam.real]), np.array([lam.imag]))[0]
        )

    # -- diagnostics ---------------------------------------------------------

    def jacobian(self, lam, h=None):
        """(J, det, singular): central-difference Jacobian of
        (Re Φ, Im Φ) in (Re λ, Im λ); singular when |det| < 1e-8."""
        lam = complex(lam)
        if h is None:
            h = _FD_STEP_REL * max(1.0, abs(lam))
        h = float(h)
        if not (h > 0.0):
            raise ValueError(f"step must be positive, got {h!r}")
        lr = np.array([lam.real + h, lam.real - h, lam.real, lam.real])
        li = np.array([lam.imag, lam.imag, lam.imag + h, lam.imag - h])
        fxp, fxm, fyp, fym = self.phi_grid(lr, li)
        gx = (fxp - fxm) / (2.0 * h)
        gy = (fyp - fym) / (2.0 * h)
        jac = np.array([[gx.real, gy.real], [gx.imag, gy.imag]])
        det = float(jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0])
        return jac, det, abs(det) < JACOBIAN_SINGULAR_TOL

    def singular_scan(self, bounds, n, backend=None):
        """Scan an n×n grid of the ε=0 map for |det| < 1e-6 inside the domain;
        returns a list of (λ, det).  Empty list = numerically injective."""
        if self.eps != 0.0:
            raise ValueError("singular_scan applies to the eps = 0 map")
        n = int(n)
        if n < 2:
            raise ValueError("scan needs n >= 2")
        bounds = tuple(map(float, bounds))
        grid = DensityGrid(bounds, n, n, None, self.params, 0.0, "scan")
        lr, li = grid.cells()
        inside = in_xi_grid(self.model, lr, li, self.params, backend=backend)
        if not inside.any():
            return []
        h = _FD_STEP_REL * np.maximum(1.0, np.hypot(lr, li))
        fxp = self.phi_grid(lr + h, li, backend=backend)
        fxm = self.phi_grid(lr - h, li, backend=backend)
        fyp = self.phi_grid(lr, li + h, backend=backend)
        fym = self.phi_grid(lr, li - h, backend=backend)
        gx = (fxp - fxm) / (2.0 * h)
        gy = (fyp - fym) / (2.0 * h)
        det = gx.real * gy.imag - gy.real * gx.imag
        flag = inside & (np.abs(det) < SCAN_DET_TOL)
        idx = np.flatnonzero(flag)
        return [(complex(lr[c], li[c]), float(det[c])) for c in idx]

    # -- inversion -----------------------------------------------------------

    def phi_inverse(self, z, tol=INVERSE_TOL):
        """λ with |Φ(λ) − z| ≤ tol·max(1, |z|); requires ε > 0."""
        if self.eps <= 0.0:
            raise ValueError("phi_inverse requires eps > 0 (homeomorphism regime)")
        z = complex(z)
        budget = tol * max(1.0, abs(z))
        lam = z
        err = abs(self.phi(lam) - z)
        for _ in range(200):
            if err <= budget:
                return lam
            step = z - self.phi(lam)
            damp = 1.0
            while damp >= 1.0 / 64.0:
                cand = lam + damp * step
                cand_err = abs(self.phi(cand) - z)
                if cand_err < err:
                    lam, err = cand, cand_err
                    break
                damp *= 0.5
            else:
                jac, det, singular = self.jacobian(lam)
                if singular:
                    raise NumericalFailure(
                        f"inverse iteration stalled at singular Jacobian "
                        f"(det={det!r})",
                        lam=lam,
                    )
                res = self.phi(lam) - z
                dx, dy = np.linalg.solve(jac, [-res.real, -res.imag])
                damp = 1.0
                while damp >= 1.0 / 64.0:
                    cand = lam + damp * complex(dx, dy)
                    cand_err = abs(self.phi(cand) - z)
                    if cand_err < err:
                        lam, err = cand, cand_err
                        break
                    damp *= 0.5
                else:
                    raise NumericalFailure(
                        f"inverse iteration stalled (|residual|={err!r})", lam=lam
                    )
        if err <= budget:
            return lam
        raise NumericalFailure(
            f"inverse did not converge (|residual|={err!r})", lam=lam
        )


# ---------------------------------------------------------------------------
# transport
# ---------------------------------------------------------------------------


class TransportedGrid:
    """Point masses at Φ(source centers) plus their binned target density.

    ``targets``/``masses`` hold the pre-binning transport (Σ masses equals the
    source mass up to addition rounding); ``binned`` is a DensityGrid on the
    target window and ``lost_mass`` the weight clipped by that window.
    """

    __slots__ = ("source", "targets", "masses", "binned", "lost_mass")

    def __init__(self, source, targets, masses, binned, lost_mass):
        self.source = source
        self.targets = targets
        self.masses = masses
        self.binned = binned
        self.lost_mass = lost_mass

    @property
    def point_mass_total(self):
        return float(self.masses.sum())

    def write_csv(self, path):
        self.binned.write_csv(path)
        meta_path = f"{path}.meta.json"
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        meta["lost_mass"] = self.lost_mass
        meta["source_mass"] = self.source.mass
        with open(meta_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _deposit(targets, masses, bounds, nx, ny, backend=None):
    x_min, x_max, y_min, y_max = map(float, bounds)
    dx = (x_max - x_min) / nx
    dy = (y_max - y_min) / ny
    grid_mass, lost = kernels(backend).cic_deposit(
        np.ascontiguousarray(targets.real),
        np.ascontiguousarray(targets.imag),
        np.ascontiguousarray(masses),
        x_min,
        y_min,
        dx,
        dy,
        nx,
        ny,
    )
    return grid_mass / (dx * dy), float(lost)


def transport(pmap, source, target_bounds, nx, ny, max_lost_frac=0.01,
              backend=None):
    """TransportedGrid of a source DensityGrid under Φ.

    Each source cell contributes value·dx·dy at Φ(center), deposited
    bilinearly onto the target bins.  Raises LostMassError when more than
    ``max_lost_frac`` of the source mass lands outside the target window.
    """
    nx, ny = int(nx), int(ny)
    if nx < 2 or ny < 2:
        raise ValueError("target grid needs nx, ny >= 2")
    src_mass = source.mass
    if not (src_mass > 0.0):
        raise ValueError(f"source mass must be positive, got {src_mass!r}")
    lr, li = source.cells()
    masses = source.values.reshape(-1) * (source.dx * source.dy)
    targets = pmap.phi_grid(lr, li, backend=backend)
    dens, lost = _deposit(targets, masses, target_bounds, nx, ny, backend=backend)
    binned = DensityGrid(
        tuple(map(float, target_bounds)), nx, ny, dens, pmap.params, pmap.eps,
        "transport",
    )
    out = TransportedGrid(source, targets, masses, binned, lost)
    if lost > max_lost_frac * src_mass:
        raise LostMassError(
            f"transport lost {lost!r} of {src_mass!r} source mass "
            f"(> {max_lost_frac:.2%})"
        )
    return out


def rebin_grid(source, target_bounds, nx, ny, backend=None):
    """Identity-transport rebinning of a DensityGrid (γ = 0 reference)."""
    lr, li = source.cells()
    masses = source.values.reshape(-1) * (source.dx * source.dy)
    dens, lost = _deposit(lr + 1j * li, masses, target_bounds, int(nx), int(ny),
                          backend=backend)
    binned = DensityGrid(
        tuple(map(float, target_bounds)), int(nx), int(ny), dens, source.params,
        source.epsilon, "rebin",
    )
    return TransportedGrid(source, lr + 1j * li, masses, binned, lost)

"""Scalar subordination equations for x0 plus a (triangular) elliptic operator.

Solves, per λ:

* ``solve_w_reg``: w = ε + t·w·φ(h⁻¹(λ,w)), the regularized circular fixed
  point (ε > 0);
* ``solve_w0``: φ(h⁻¹(λ,w)) = 1/t on the open domain Ξ_t, with w = 0 outside;
* ``solve_s``: the triangular boundary scale s(λ), which satisfies the same
  equation at the effective time t_eff = (α−β)/(log α − log β);
* ``solve_sigma_system``: the (σ, D, ε₀) system of the regularized triangular
  operator, with σ = (α−β)D and
  ε₀² = ε²(α−β)² e^σ / (α − β e^σ)²;
* ``epsilon_profiles`` / ``q_eps``: closed forms attached to a solved state.

Every equation has a proven monotone residual, so each solver brackets the
unique root and refines by alternating bisection/secant (see the kernel
modules).  ε = 0 evaluations never go through the regularized equations; they
use the dedicated w(0)/s(λ) route, which stays well conditioned at the domain
boundary.

Grid functions take flat cell arrays (lr, li) and return per-cell arrays;
scalar wrappers validate inputs and check residuals.
"""

import numpy as np

from .backend import kernels
from .models import NumericalFailure, h_inv_at_zero, hinv0_grid, phi_h_inv_grid

#: residual budget for the fixed-point equations, scaled by max(1, w)
RESIDUAL_TOL = 1e-12

_GAMMA_SLACK = 1e-12


class EllipticParams:
    """Parameters (α, β, γ) of the triangular elliptic operator.

    α is the variance weight above the diagonal, β below, γ the
    pseudo-covariance; admissibility requires |γ| ≤ √(αβ) (PSD boundary
    included, with 1e-12 slack).  α = β is the circular/elliptic case with
    t = α.  The effective time t_eff = (α−β)/(log α − log β) (continuously
    extended to α at α = β) is the single time parameter the γ = 0 Brown
    measure depends on.
    """

    __slots__ = ("alpha", "beta", "gamma")

    def __init__(self, alpha, beta, gamma=0j):
        alpha = float(alpha)
        beta = float(beta)
        gamma = complex(gamma)
        if not (np.isfinite(alpha) and alpha > 0.0):
            raise ValueError(f"alpha must be positive, got {alpha!r}")
        if not (np.isfinite(beta) and beta > 0.0):
            raise ValueError(f"beta must be positive, got {beta!r}")
        if not (np.isfinite(gamma.real) and np.isfinite(gamma.imag)):
            raise ValueError(f"gamma must be finite, got {gamma!r}")
        if abs(gamma) > np.sqrt(alpha * beta) + _GAMMA_SLACK:
            raise ValueError(
                f"|gamma| = {abs(gamma)!r} exceeds sqrt(alpha*beta) = "
                f"{np.sqrt(alpha * beta)!r}"
            )
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma

    @classmethod
    def from_t(cls, t, gamma=0j):
        """Circular/elliptic parameters with variance t (α = β = t)."""
        return cls(t, t, gamma)

    @property
    def is_circular(self):
        return self.alpha == self.beta

    @property
    def t_eff(self):
        if self.alpha == self.beta:
            return self.alpha
        return (self.alpha - self.beta) / (np.log(self.alpha) - np.log(self.beta))

    @property
    def threshold(self):
        """Domain threshold 1/t_eff for φ(|λ−x0|⁻²)."""
        return 1.0 / self.t_eff

    def __repr__(self):
        return (
            f"EllipticParams(alpha={self.alpha!r}, beta={self.beta!r}, "
            f"gamma={self.gamma!r})"
        )


# ---------------------------------------------------------------------------
# grid solvers
# ---------------------------------------------------------------------------


def solve_w0_grid(model, lr, li, t, d2=None, backend=None):
    """(w, inside) per cell for φ(h⁻¹(λ,w)) = 1/t; w = 0 off the open Ξ_t."""
    K = kernels(backend)
    if model.is_matrix:
        if d2 is None:
            d2 = model.d2_rows(lr, li)
        w, inside = K.pre_w0_grid(d2, model.wt, float(t))
    else:
        w, inside = K.nodes_w0_grid(model.zr, model.zi, model.wt, lr, li, float(t))
    return w, inside.astype(bool)


def solve_w_reg_grid(model, lr, li, t, eps, d2=None, backend=None):
    """w(ε; λ, t) per cell, the root of w = ε + t·w·φ(h⁻¹(λ,w)) in
    (ε, (ε+√(ε²+4t))/2]."""
    K = kernels(backend)
    if model.is_matrix:
        if d2 is None:
            d2 = model.d2_rows(lr, li)
        return K.pre_wreg_grid(d2, model.wt, float(t), float(eps))
    return K.nodes_wreg_grid(
        model.zr, model.zi, model.wt, lr, li, float(t), float(eps)
    )


def solve_sigma_grid(model, lr, li, alpha, beta, eps, d2=None, backend=None):
    """σ(λ, ε) per cell; sign follows α−β (α < β mirrors the bracket)."""
    K = kernels(backend)
    a, b = float(alpha), float(beta)
    flip = a < b
    if flip:
        a, b = b, a
    if model.is_matrix:
        if d2 is None:
            d2 = model.d2_rows(lr, li)
        sig = K.pre_sigma_grid(d2, model.wt, a, b, float(eps))
    else:
        sig = K.nodes_sigma_grid(model.zr, model.zi, model.wt, lr, li, a, b, float(eps))
    return -sig if flip else sig


def in_xi_grid(model, lr, li, params, d2=None, backend=None):
    """Strict domain test φ(|λ−x0|⁻²) > 1/t_eff per cell (boundary is out)."""
    acc, _ = hinv0_grid(model, lr, li, d2=d2, backend=backend)
    return acc > params.threshold


# ---------------------------------------------------------------------------
# scalar operations
# ---------------------------------------------------------------------------


def _one_cell(lam):
    lam = complex(lam)
    if not (np.isfinite(lam.real) and np.isfinite(lam.imag)):
        raise ValueError(f"non-finite lambda {lam!r}")
    return np.array([lam.real]), np.array([lam.imag])


def solve_w_reg(model, lam, t, eps):
    """Scalar w(ε; λ, t) with a residual check (ε > 0, t > 0)."""
    t = float(t)
    eps = float(eps)
    if not (t > 0.0 and np.isfinite(t)):
        raise ValueError(f"t must be positive, got {t!r}")
    if not (eps > 0.0 and np.isfinite(eps)):
        raise ValueError(f"eps must be positive, got {eps!r}")
    lr, li = _one_cell(lam)
    w = float(solve_w_reg_grid(model, lr, li, t, eps)[0])
    phi = float(phi_h_inv_grid(model, lr, li, np.array([w]))[0])
    res = abs(eps + t * w * phi - w)
    if not (res <= RESIDUAL_TOL * max(1.0, w)):
        raise NumericalFailure(
            f"regularized fixed point stalled at w={w!r} (residual {res!r})",
            lam=complex(lam),
        )
    return w


def solve_w0(model, lam, t):
    """Scalar (w, in_domain) for the unregularized equation at time t."""
    t = float(t)
    if not (t > 0.0 and np.isfinite(t)):
        raise ValueError(f"t must be positive, got {t!r}")
    lr, li = _one_cell(lam)
    w, inside = solve_w0_grid(model, lr, li, t)
    return float(w[0]), bool(inside[0])


def in_xi(model, lam, params):
    """Strict membership of λ in Ξ (atoms of x0 count as inside)."""
    return h_inv_at_zero(model, lam) > params.threshold


def solve_s(model, lam, params):
    """Triangular boundary scale s(λ) ≥ 0; equals w(0; λ, t_eff)."""
    return solve_w0(model, lam, params.t_eff)[0]


def _eps0_sq(alpha, beta, eps, sigma):
    es = np.exp(sigma)
    den = alpha - beta * es
    return (eps * eps) * (alpha - beta) ** 2 * es / (den * den)


def eps0_from_sigma(alpha, beta, eps, sigma):
    """ε₀ = ε|α−β|e^{σ/2}/|α−βe^σ| from a solved σ (array-safe)."""
    return np.sqrt(_eps0_sq(alpha, beta, eps, sigma))


def solve_sigma_system(model, lam, alpha, beta, eps):
    """(σ, D, ε₀) for the regularized triangular operator (α ≠ β, ε > 0).

    σ solves φ(h⁻¹(λ, ε₀(σ))) = σ/(α−β) on the bracket between 0 and
    log(α/β); D = σ/(α−β) and ε₀ = ε|α−β| e^{σ/2}/|α−βe^σ|.
    """
    alpha = float(alpha)
    beta = float(beta)
    eps = float(eps)
    if alpha == beta:
        raise ValueError("solve_sigma_system requires alpha != beta")
    if not (eps > 0.0 and np.isfinite(eps)):
        raise ValueError(f"eps must be positive, got {eps!r}")
    lr, li = _one_cell(lam)
    sig = float(solve_sigma_grid(model, lr, li, alpha, beta, eps)[0])
    hi = np.log(alpha / beta)
    if not (0.0 < sig / (alpha - beta) < hi / (alpha - beta)):
        raise NumericalFailure(
            f"sigma bracket degenerated (sigma={sig!r})", lam=complex(lam)
        )
    d = sig / (alpha - beta)
    eps0 = float(np.sqrt(_eps0_sq(alpha, beta, eps, sig)))
    return sig, d, eps0


def epsilon_profiles(sigma, d, eps, alpha, beta, ts):
    """Closed-form profiles (ε₁(t), ε₂(t)) on t ∈ [0,1] from a solved state.

    ε₁(t) = ε(α−β) e^{(1−t)σ}/(α−βe^σ), ε₂(t) the mirror image with e^{tσ};
    their product is constant in t and equals ε₀², and mean(ε₁) relates to
    ε₀ through (e^σ−1) e^{−σ/2}/(D(α−β)).
    """
    ts = np.asarray(ts, np.float64)
    pref = eps * (alpha - beta) / (alpha - beta * np.exp(sigma))
    return pref * np.exp((1.0 - ts) * sigma), pref * np.exp(ts * sigma)


def q_eps(d, eps, alpha, beta):
    """Shift scalar ε(e^σ−1)/(α−βe^σ) at σ=(α−β)D; εD/(1−αD) in the α=β limit."""
    if alpha == beta:
        return eps * d / (1.0 - alpha * d)
    s = (alpha - beta) * d
    return eps * np.expm1(s) / (alpha - beta * np.exp(s))


# ---------------------------------------------------------------------------
# solved-state container
# ---------------------------------------------------------------------------


class SubordinationState:
    """All subordination data at one (λ, ε) for the given parameters.

    Fields: ``w`` is the circular scale (w(ε) or w(0) at t_eff), ``sigma``,
    ``d`` and ``eps0`` the triangular system data (σ = 0 and ε₀ = w in the
    circular case), ``in_domain`` the strict Ξ membership of λ.
    """

    __slots__ = ("lam", "eps", "w", "sigma", "d", "eps0", "in_domain")

    def __init__(self, lam, eps, w, sigma, d, eps0, in_domain):
        self.lam = lam
        self.eps = eps
        self.w = w
        self.sigma = sigma
        self.d = d
        self.eps0 = eps0
        self.in_domain = in_domain

    def residual_fixed_point(self, model, t):
        """|w − ε − t·w·φ(h⁻¹(λ,w))| (regularized circular equation)."""
        lr, li = _one_cell(self.lam)
        phi = float(phi_h_inv_grid(model, lr, li, np.array([self.w]))[0])
        return abs(self.eps + t * self.w * phi - self.w)

    def residual_d(self, model):
        """|D − φ(h⁻¹(λ, ε₀))| (triangular system consistency)."""
        lr, li = _one_cell(self.lam)
        phi = float(phi_h_inv_grid(model, lr, li, np.array([self.eps0]))[0])
        return abs(self.d - phi)


def solve_state(model, lam, params, eps=0.0):
    """SubordinationState at (λ, ε) for circular or triangular parameters."""
    eps = float(eps)
    if eps < 0.0 or not np.isfinite(eps):
        raise ValueError(f"eps must be >= 0, got {eps!r}")
    lam = complex(lam)
    t = params.t_eff
    inside = in_xi(model, lam, params)
    if params.is_circular:
        if eps > 0.0:
            w = solve_w_reg(model, lam, t, eps)
            lr, li = _one_cell(lam)
            d = float(phi_h_inv_grid(model, lr, li, np.array([w]))[0])
        else:
            w, _ = solve_w0(model, lam, t)
            d = 1.0 / t if inside else float("nan")
        return SubordinationState(lam, eps, w, 0.0, d, w, inside)
    if eps > 0.0:
        sig, d, eps0 = solve_sigma_system(model, lam, params.alpha, params.beta, eps)
        return SubordinationState(lam, eps, eps0, sig, d, eps0, inside)
    s = solve_s(model, lam, params)
    d = 1.0 / t if inside else float("nan")
    return SubordinationState(
        lam, 0.0, s, (params.alpha - params.beta) * d, d, s, inside
    )

"""Numba kernels: bracketed scalar solvers and trace sums over flat λ arrays.

ARITHMETIC CONTRACT (shared with ``_kernels_np``, which mirrors every
operation): for each λ-cell the sequence of IEEE-754 double operations is
fixed by this file.  Node sums accumulate sequentially in node order; the
bracket iteration below is used verbatim by every solver.  Any edit here must
be replicated op-for-op in the numpy mirror, and vice versa — the equivalence
tests assert bit-identical outputs for the transcendental-free paths.

Bracket iteration (f strictly sign-changing on [lo, hi], f(lo) > 0 >= f(hi)):
  for it in 0..199:
      stop if hi - lo <= 1e-14 * max(1, hi)
      mid = secant from (lo, flo), (hi, fhi) on odd it, clamped into (lo, hi),
            else bisection midpoint
      stop if mid collapses onto an endpoint
      update the endpoint whose sign matches f(mid)
  return (lo + hi) / 2

`error_model="numpy"` makes x/0 produce ±inf exactly as the mirror does; the
secant then degrades to bisection through IEEE inf/nan propagation with no
extra branches.

Model data arrives either as point-mass node arrays (zr, zi, wt) — atoms and
quadrature nodes of a normal operator — or as precomputed squared singular
values d2[cell, i] with trace weights wt[i] for dense matrix models.
"""

import numpy as np
from numba import njit, prange
from numba.core.errors import NumbaWarning
import warnings

warnings.filterwarnings("ignore", category=NumbaWarning)

WIDTH_TOL = 1e-14
MAX_ITER = 200


# ---------------------------------------------------------------------------
# node-array variants (normal models: atoms + quadrature nodes)
# ---------------------------------------------------------------------------


@njit(cache=True, parallel=True, error_model="numpy")
def nodes_w0_grid(zr, zi, wt, lr, li, t):
    """Solve t * sum_i wt_i/(|λ-z_i|^2 + w^2) = 1 for w in (0, sqrt(t)].

    Returns (w, inside): w = 0 with inside = 0 when the λ-cell is outside the
    open positive-density domain (boundary counts as outside); w = sqrt(t)
    when the equation is already satisfied at the upper endpoint.
    """
    m = lr.size
    k = zr.size
    w = np.zeros(m, np.float64)
    inside = np.zeros(m, np.uint8)
    rt = np.sqrt(t)
    for c in prange(m):
        x = lr[c]
        y = li[c]
        acc = 0.0
        for i in range(k):
            dr = x - zr[i]
            di = y - zi[i]
            acc += wt[i] / ((dr * dr + di * di) + 0.0)
        f0 = t * acc - 1.0
        if not (f0 > 0.0):
            continue
        acc = 0.0
        for i in range(k):
            dr = x - zr[i]
            di = y - zi[i]
            acc += wt[i] / ((dr * dr + di * di) + t)
        fhi = t * acc - 1.0
        if fhi >= 0.0:
            w[c] = rt
            inside[c] = 1
            continue
        lo = 0.0
        flo = f0
        hi = rt
        for it in range(MAX_ITER):
            if hi - lo <= WIDTH_TOL * max(1.0, hi):
                break
            if (it & 1) == 1:
                den = flo - fhi
                u = hi - lo
                v = flo * u
                mid = lo + v / den
                if not (mid > lo and mid < hi):
                    mid = 0.5 * (lo + hi)
            else:
                mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            s2 = mid * mid
            acc = 0.0
            for i in range(k):
                dr = x - zr[i]
                di = y - zi[i]
                acc += wt[i] / ((dr * dr + di * di) + s2)
            fm = t * acc - 1.0
            if fm > 0.0:
                lo = mid
                flo = fm
            else:
                hi = mid
                fhi = fm
        w[c] = 0.5 * (lo + hi)
        inside[c] = 1
    return w, inside


@njit(cache=True, parallel=True, error_model="numpy")
def nodes_wreg_grid(zr, zi, wt, lr, li, t, eps):
    """Solve the regularized fixed point w = eps + t*w*phi(h^{-1}(λ,w)), eps > 0.

    Single root in (eps, (eps + sqrt(eps^2 + 4t))/2]; the residual
    eps + t*w*phi - w is positive left of it.
    """
    m = lr.size
    k = zr.size
    w = np.empty(m, np.float64)
    hi0 = 0.5 * (eps + np.sqrt(eps * eps + 4.0 * t))
    for c in prange(m):
        x = lr[c]
        y = li[c]
        s2 = eps * eps
        acc = 0.0
        for i in range(k):
            dr = x - zr[i]
            di = y - zi[i]
            acc += wt[i] / ((dr * dr + di * di) + s2)
        flo = (eps + t * (eps * acc)) - eps
        s2 = hi0 * hi0
        acc = 0.0
        for i in range(k):
            dr = x - zr[i]
            di = y - zi[i]
            acc += wt[i] / ((dr * dr + di * di) + s2)
        fhi = (eps + t * (hi0 * acc)) - hi0
        if fhi >= 0.0:
            w[c] = hi0
            continue
        lo = eps
        hi = hi0
        for it in range(MAX_ITER):
            if hi - lo <= WIDTH_TOL * max(1.0, hi):
                break
            if (it & 1) == 1:
                den = flo - fhi
                u = hi - lo
                v = flo * u
                mid = lo + v / den
                if not (mid > lo and mid < hi):
                    mid = 0.5 * (lo + hi)
            else:
                mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            s2 = mid * mid
            acc = 0.0
            for i in range(k):
                dr = x - zr[i]
                di = y - zi[i]
                acc += wt[i] / ((dr * dr + di * di) + s2)
            fm = (eps + t * (mid * acc)) - mid
            if fm > 0.0:
                lo = mid
                flo = fm
            else:
                hi = mid
                fhi = fm
        w[c] = 0.5 * (lo + hi)
    return w


@njit(cache=True, parallel=True, error_model="numpy")
def nodes_sigma_grid(zr, zi, wt, lr, li, alpha, beta, eps):
    """Solve phi(h^{-1}(λ, e0(σ))) = σ/(α-β) for σ in (0, log(α/β)).

    Requires alpha > beta > 0 and eps > 0 (callers mirror the α < β case).
    e0(σ)^2 = eps^2 (α-β)^2 e^σ / (α - β e^σ)^2; the squared denominator makes
    the right bracket end robust: at σ = log(α/β) the denominator underflows
    toward 0, e0^2 → inf, and the residual is negative.
    """
    m = lr.size
    k = zr.size
    out = np.empty(m, np.float64)
    ab = alpha - beta
    L = np.log(alpha / beta)
    c0 = (eps * eps) * (ab * ab)
    for c in prange(m):
        x = lr[c]
        y = li[c]
        es = np.exp(0.0)
        den = alpha - beta * es
        q = den * den
        e0sq = (c0 * es) / q
        acc = 0.0
        for i in range(k):
            dr = x - zr[i]
            di = y - zi[i]
            acc += wt[i] / ((dr * dr + di * di) + e0sq)
        flo = acc - 0.0 / ab
        if not (flo > 0.0):
            out[c] = 0.0
            continue
        es = np.exp(L)
        den = alpha - beta * es
        q = den * den
        e0sq = (c0 * es) / q
        acc = 0.0
        for i in range(k):
            dr = x - zr[i]
            di = y - zi[i]
            acc += wt[i] / ((dr * dr + di * di) + e0sq)
        fhi = acc - L / ab
        if fhi >= 0.0:
            out[c] = L
            continue
        lo = 0.0
        hi = L
        for it in range(MAX_ITER):
            if hi - lo <= WIDTH_TOL * max(1.0, hi):
                break
            if (it & 1) == 1:
                den2 = flo - fhi
                u = hi - lo
                v = flo * u
                mid = lo + v / den2
                if not (mid > lo and mid < hi):
                    mid = 0.5 * (lo + hi)
            else:
                mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            es = np.exp(mid)
            den = alpha - beta * es
            q = den * den
            e0sq = (c0 * es) / q
            acc = 0.0
            for i in range(k):
                dr = x - zr[i]
                di = y - zi[i]
                acc += wt[i] / ((dr * dr + di * di) + e0sq)
            fm = acc - mid / ab
            if fm > 0.0:
                lo = mid
                flo = fm
            else:
                hi = mid
                fhi = fm
        out[c] = 0.5 * (lo + hi)
    return out


@njit(cache=True, parallel=True, error_model="numpy")
def nodes_bundle_grid(zr, zi, wt, lr, li, s):
    """Trace sums at (λ, s): h_inv, h_inv_sq, cross (re, im), p0 (re, im).

    h_inv     = Σ wt_i / (d2_i + s^2)
    h_inv_sq  = Σ wt_i / (d2_i + s^2)^2        (= φ(h^-1 k^-1) for normal x0)
    cross     = Σ wt_i (λ - z_i) / (d2_i + s^2)^2
    p0        = Σ wt_i conj(λ - z_i) / (d2_i + s^2)
    """
    m = lr.size
    k = zr.size
    h1 = np.empty(m, np.float64)
    h2 = np.empty(m, np.float64)
    crr = np.empty(m, np.float64)
    cri = np.empty(m, np.float64)
    p0r = np.empty(m, np.float64)
    p0i = np.empty(m, np.float64)
    for c in prange(m):
        x = lr[c]
        y = li[c]
        s2 = s[c] * s[c]
        a1 = 0.0
        a2 = 0.0
        a3 = 0.0
        a4 = 0.0
        a5 = 0.0
        a6 = 0.0
        for i in range(k):
            dr = x - zr[i]
            di = y - zi[i]
            den1 = (dr * dr + di * di) + s2
            den2 = den1 * den1
            wti = wt[i]
            a1 += wti / den1
            a2 += wti / den2
            a3 += wti * dr / den2
            a4 += wti * di / den2
            a5 += wti * dr / den1
            a6 += wti * di / den1
        h1[c] = a1
        h2[c] = a2
        crr[c] = a3
        cri[c] = a4
        p0r[c] = a5
        p0i[c] = -a6
    return h1, h2, crr, cri, p0r, p0i


@njit(cache=True, parallel=True, error_model="numpy")
def nodes_logdet_grid(zr, zi, wt, lr, li, s):
    """Σ wt_i log(d2_i + s^2) per cell (−inf when a node coincides and s=0)."""
    m = lr.size
    k = zr.size
    out = np.empty(m, np.float64)
    for c in prange(m):
        x = lr[c]
        y = li[c]
        s2 = s[c] * s[c]
        acc = 0.0
        for i in range(k):
            dr = x - zr[i]
            di = y - zi[i]
            acc += wt[i] * np.log((dr * dr + di * di) + s2)
        out[c] = acc
    return out


@njit(cache=True, parallel=True, error_model="numpy")
def nodes_hinv0_grid(zr, zi, wt, lr, li):
    """(Σ wt_i/d2_i, min_i d2_i) per cell; +inf where a node sits at λ."""
    m = lr.size
    k = zr.size
    acc = np.empty(m, np.float64)
    mind2 = np.empty(m, np.float64)
    for c in prange(m):
        x = lr[c]
        y = li[c]
        a = 0.0
        mn = np.inf
        for i in range(k):
            dr = x - zr[i]
            di = y - zi[i]
            d2 = dr * dr + di * di
            if d2 < mn:
                mn = d2
            a += wt[i] / d2
        acc[c] = a
        mind2[c] = mn
    return acc, mind2


# ---------------------------------------------------------------------------
# precomputed-d2 variants (dense matrix models: d2 = squared singular values)
# ---------------------------------------------------------------------------


@njit(cache=True, parallel=True, error_model="numpy")
def pre_w0_grid(d2, wt, t):
    m = d2.shape[0]
    k = d2.shape[1]
    w = np.zeros(m, np.float64)
    inside = np.zeros(m, np.uint8)
    rt = np.sqrt(t)
    for c in prange(m):
        acc = 0.0
        for i in range(k):
            acc += wt[i] / (d2[c, i] + 0.0)
        f0 = t * acc - 1.0
        if not (f0 > 0.0):
            continue
        acc = 0.0
        for i in range(k):
            acc += wt[i] / (d2[c, i] + t)
        fhi = t * acc - 1.0
        if fhi >= 0.0:
            w[c] = rt
            inside[c] = 1
            continue
        lo = 0.0
        flo = f0
        hi = rt
        for it in range(MAX_ITER):
            if hi - lo <= WIDTH_TOL * max(1.0, hi):
                break
            if (it & 1) == 1:
                den = flo - fhi
                u = hi - lo
                v = flo * u
                mid = lo + v / den
                if not (mid > lo and mid < hi):
                    mid = 0.5 * (lo + hi)
            else:
                mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            s2 = mid * mid
            acc = 0.0
            for i in range(k):
                acc += wt[i] / (d2[c, i] + s2)
            fm = t * acc - 1.0
            if fm > 0.0:
                lo = mid
                flo = fm
            else:
                hi = mid
                fhi = fm
        w[c] = 0.5 * (lo + hi)
        inside[c] = 1
    return w, inside


@njit(cache=True, parallel=True, error_model="numpy")
def pre_wreg_grid(d2, wt, t, eps):
    m = d2.shape[0]
    k = d2.shape[1]
    w = np.empty(m, np.float64)
    hi0 = 0.5 * (eps + np.sqrt(eps * eps + 4.0 * t))
    for c in prange(m):
        s2 = eps * eps
        acc = 0.0
        for i in range(k):
            acc += wt[i] / (d2[c, i] + s2)
        flo = (eps + t * (eps * acc)) - eps
        s2 = hi0 * hi0
        acc = 0.0
        for i in range(k):
            acc += wt[i] / (d2[c, i] + s2)
        fhi = (eps + t * (hi0 * acc)) - hi0
        if fhi >= 0.0:
            w[c] = hi0
            continue
        lo = eps
        hi = hi0
        for it in range(MAX_ITER):
            if hi - lo <= WIDTH_TOL * max(1.0, hi):
                break
            if (it & 1) == 1:
                den = flo - fhi
                u = hi - lo
                v = flo * u
                mid = lo + v / den
                if not (mid > lo and mid < hi):
                    mid = 0.5 * (lo + hi)
            else:
                mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            s2 = mid * mid
            acc = 0.0
            for i in range(k):
                acc += wt[i] / (d2[c, i] + s2)
            fm = (eps + t * (mid * acc)) - mid
            if fm > 0.0:
                lo = mid
                flo = fm
            else:
                hi = mid
                fhi = fm
        w[c] = 0.5 * (lo + hi)
    return w


@njit(cache=True, parallel=True, error_model="numpy")
def pre_sigma_grid(d2, wt, alpha, beta, eps):
    m = d2.shape[0]
    k = d2.shape[1]
    out = np.empty(m, np.float64)
    ab = alpha - beta
    L = np.log(alpha / beta)
    c0 = (eps * eps) * (ab * ab)
    for c in prange(m):
        es = np.exp(0.0)
        den = alpha - beta * es
        q = den * den
        e0sq = (c0 * es) / q
        acc = 0.0
        for i in range(k):
            acc += wt[i] / (d2[c, i] + e0sq)
        flo = acc - 0.0 / ab
        if not (flo > 0.0):
            out[c] = 0.0
            continue
        es = np.exp(L)
        den = alpha - beta * es
        q = den * den
        e0sq = (c0 * es) / q
        acc = 0.0
        for i in range(k):
            acc += wt[i] / (d2[c, i] + e0sq)
        fhi = acc - L / ab
        if fhi >= 0.0:
            out[c] = L
            continue
        lo = 0.0
        hi = L
        for it in range(MAX_ITER):
            if hi - lo <= WIDTH_TOL * max(1.0, hi):
                break
            if (it & 1) == 1:
                den2 = flo - fhi
                u = hi - lo
                v = flo * u
                mid = lo + v / den2
                if not (mid > lo and mid < hi):
                    mid = 0.5 * (lo + hi)
            else:
                mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            es = np.exp(mid)
            den = alpha - beta * es
            q = den * den
            e0sq = (c0 * es) / q
            acc = 0.0
            for i in range(k):
                acc += wt[i] / (d2[c, i] + e0sq)
            fm = acc - mid / ab
            if fm > 0.0:
                lo = mid
                flo = fm
            else:
                hi = mid
                fhi = fm
        out[c] = 0.5 * (lo + hi)
    return out


@njit(cache=True, parallel=True, error_model="numpy")
def pre_sums_grid(d2, wt, s):
    """(h_inv, h_inv_sq) per cell from precomputed d2 rows."""
    m = d2.shape[0]
    k = d2.shape[1]
    h1 = np.empty(m, np.float64)
    h2 = np.empty(m, np.float64)
    for c in prange(m):
        s2 = s[c] * s[c]
        a1 = 0.0
        a2 = 0.0
        for i in range(k):
            den1 = d2[c, i] + s2
            den2 = den1 * den1
            a1 += wt[i] / den1
            a2 += wt[i] / den2
        h1[c] = a1
        h2[c] = a2
    return h1, h2


@njit(cache=True, parallel=True, error_model="numpy")
def pre_logdet_grid(d2, wt, s):
    m = d2.shape[0]
    k = d2.shape[1]
    out = np.empty(m, np.float64)
    for c in prange(m):
        s2 = s[c] * s[c]
        acc = 0.0
        for i in range(k):
            acc += wt[i] * np.log(d2[c, i] + s2)
        out[c] = acc
    return out


@njit(cache=True, parallel=True, error_model="numpy")
def pre_hinv0_grid(d2, wt):
    m = d2.shape[0]
    k = d2.shape[1]
    acc = np.empty(m, np.float64)
    mind2 = np.empty(m, np.float64)
    for c in prange(m):
        a = 0.0
        mn = np.inf
        for i in range(k):
            v = d2[c, i]
            if v < mn:
                mn = v
            a += wt[i] / v
        acc[c] = a
        mind2[c] = mn
    return acc, mind2


# ---------------------------------------------------------------------------
# cloud-in-cell mass deposit (serial: deterministic accumulation order)
# ---------------------------------------------------------------------------


@njit(cache=True, error_model="numpy")
def cic_deposit(px, py, mass, x0, y0, dx, dy, nx, ny):
    """Deposit point masses onto an nx × ny grid of cell centers bilinearly.

    Cell (jx, jy) has center (x0 + (jx+0.5)dx, y0 + (jy+0.5)dy).  Each point
    splits among its 4 surrounding centers with bilinear weights; weight
    falling outside the window is returned as lost mass.  Zero-mass points are
    skipped (their coordinates may be non-finite); positive-mass points with
    non-finite coordinates count as lost.
    """
    grid = np.zeros((ny, nx), np.float64)
    lost = 0.0
    for p in range(px.size):
        mp = mass[p]
        if mp == 0.0:
            continue
        fx = (px[p] - x0) / dx - 0.5
        fy = (py[p] - y0) / dy - 0.5
        if not (np.isfinite(fx) and np.isfinite(fy)):
            lost += mp
            continue
        ix = int(np.floor(fx))
        iy = int(np.floor(fy))
        tx = fx - ix
        ty = fy - iy
        for oy in range(2):
            wy = ty if oy == 1 else 1.0 - ty
            jy = iy + oy
            for ox in range(2):
                wx = tx if ox == 1 else 1.0 - tx
                jx = ix + ox
                wgt = wx * wy
                if 0 <= jx < nx and 0 <= jy < ny:
                    grid[jy, jx] += mp * wgt
                else:
                    lost += mp * wgt
    return grid, lost

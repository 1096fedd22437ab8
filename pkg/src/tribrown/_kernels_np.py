"""Pure-numpy mirror of ``_kernels_nb``.

Vectorizes over λ-cells while keeping each cell's floating-point operation
sequence identical to the scalar numba kernels: node sums accumulate
sequentially in node order (never ``np.sum``, whose pairwise reduction would
round differently), and the bracket iteration advances all unconverged cells
in lockstep with per-cell masks, reproducing each cell's scalar trajectory.
See the ARITHMETIC CONTRACT note in ``_kernels_nb``; edits must stay in sync.

Only the cloud-in-cell deposit differs in accumulation *order* (grouped by
neighbor class instead of per point), which is covered by the documented
reordering tolerance for binned grids.
"""

import numpy as np

WIDTH_TOL = 1e-14
MAX_ITER = 200


def _phi_nodes(zr, zi, wt, lr, li, s2):
    """Σ wt_i / (|λ - z_i|^2 + s2); s2 scalar or per-cell array."""
    acc = np.zeros_like(lr)
    for i in range(zr.size):
        dr = lr - zr[i]
        di = li - zi[i]
        acc = acc + wt[i] / ((dr * dr + di * di) + s2)
    return acc


def _phi_pre(d2, wt, s2):
    acc = np.zeros(d2.shape[0], np.float64)
    for i in range(d2.shape[1]):
        acc = acc + wt[i] / (d2[:, i] + s2)
    return acc


def _bracket_solve(f, lo, flo, hi, fhi, active):
    """Masked lockstep version of the scalar bracket iteration.

    `active` marks cells still iterating; others keep their (lo, hi) frozen.
    Returns the bracket centers 0.5*(lo+hi) for every cell.
    """
    lo = lo.copy()
    hi = hi.copy()
    flo = flo.copy()
    fhi = fhi.copy()
    active = active.copy()
    for it in range(MAX_ITER):
        if not active.any():
            break
        stop = active & (hi - lo <= WIDTH_TOL * np.maximum(1.0, hi))
        active = active & ~stop
        if not active.any():
            break
        if (it & 1) == 1:
            den = flo - fhi
            u = hi - lo
            v = flo * u
            mid = lo + v / den
            bad = ~((mid > lo) & (mid < hi))
            mid = np.where(bad, 0.5 * (lo + hi), mid)
        else:
            mid = 0.5 * (lo + hi)
        collapse = active & ((mid == lo) | (mid == hi))
        active = active & ~collapse
        if not active.any():
            break
        fm = f(mid)
        pos = fm > 0.0
        up_lo = active & pos
        up_hi = active & ~pos
        lo = np.where(up_lo, mid, lo)
        flo = np.where(up_lo, fm, flo)
        hi = np.where(up_hi, mid, hi)
        fhi = np.where(up_hi, fm, fhi)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# node-array variants
# ---------------------------------------------------------------------------


def nodes_w0_grid(zr, zi, wt, lr, li, t):
    m = lr.size
    with np.errstate(all="ignore"):
        f0 = t * _phi_nodes(zr, zi, wt, lr, li, 0.0) - 1.0
        inside = f0 > 0.0
        fhi0 = t * _phi_nodes(zr, zi, wt, lr, li, t) - 1.0
        at_top = inside & (fhi0 >= 0.0)
        solve = inside & ~at_top
        rt = np.sqrt(t)

        def f(mid):
            return t * _phi_nodes(zr, zi, wt, lr, li, mid * mid) - 1.0

        center = _bracket_solve(
            f, np.zeros(m), f0, np.full(m, rt), fhi0, solve
        )
        w = np.where(solve, center, 0.0)
        w = np.where(at_top, rt, w)
    return w, inside.astype(np.uint8)


def nodes_wreg_grid(zr, zi, wt, lr, li, t, eps):
    m = lr.size
    with np.errstate(all="ignore"):
        hi0 = 0.5 * (eps + np.sqrt(eps * eps + 4.0 * t))
        acc = _phi_nodes(zr, zi, wt, lr, li, eps * eps)
        flo = (eps + t * (eps * acc)) - eps
        acc = _phi_nodes(zr, zi, wt, lr, li, hi0 * hi0)
        fhi0 = (eps + t * (hi0 * acc)) - hi0
        at_top = fhi0 >= 0.0
        solve = ~at_top

        def f(mid):
            a = _phi_nodes(zr, zi, wt, lr, li, mid * mid)
            return (eps + t * (mid * a)) - mid

        center = _bracket_solve(
            f, np.full(m, eps), flo, np.full(m, hi0), fhi0, solve
        )
        w = np.where(at_top, hi0, center)
    return w


def nodes_sigma_grid(zr, zi, wt, lr, li, alpha, beta, eps):
    ab = alpha - beta
    L = np.log(alpha / beta)
    c0 = (eps * eps) * (ab * ab)
    m = lr.size

    def e0sq_of(sig):
        es = np.exp(sig)
        den = alpha - beta * es
        q = den * den
        return (c0 * es) / q

    def f(sig):
        acc = _phi_nodes(zr, zi, wt, lr, li, e0sq_of(sig))
        return acc - sig / ab

    with np.errstate(all="ignore"):
        flo = f(0.0)
        degenerate = ~(flo > 0.0)
        fhi0 = f(np.full(m, L))
        at_top = ~degenerate & (fhi0 >= 0.0)
        solve = ~degenerate & ~at_top
        center = _bracket_solve(
            f, np.zeros(m), flo, np.full(m, L), fhi0, solve
        )
        out = np.where(solve, center, 0.0)
        out = np.where(at_top, L, out)
    return out


def nodes_bundle_grid(zr, zi, wt, lr, li, s):
    m = lr.size
    s2 = s * s
    a1 = np.zeros(m)
    a2 = np.zeros(m)
    a3 = np.zeros(m)
    a4 = np.zeros(m)
    a5 = np.zeros(m)
    a6 = np.zeros(m)
    with np.errstate(all="ignore"):
        for i in range(zr.size):
            dr = lr - zr[i]
            di = li - zi[i]
            den1 = (dr * dr + di * di) + s2
            den2 = den1 * den1
            wti = wt[i]
            a1 = a1 + wti / den1
            a2 = a2 + wti / den2
            a3 = a3 + wti * dr / den2
            a4 = a4 + wti * di / den2
            a5 = a5 + wti * dr / den1
            a6 = a6 + wti * di / den1
    return a1, a2, a3, a4, a5, -a6


def nodes_logdet_grid(zr, zi, wt, lr, li, s):
    s2 = s * s
    acc = np.zeros(lr.size)
    with np.errstate(all="ignore"):
        for i in range(zr.size):
            dr = lr - zr[i]
            di = li - zi[i]
            acc = acc + wt[i] * np.log((dr * dr + di * di) + s2)
    return acc


def nodes_hinv0_grid(zr, zi, wt, lr, li):
    acc = np.zeros(lr.size)
    mind2 = np.full(lr.size, np.inf)
    with np.errstate(all="ignore"):
        for i in range(zr.size):
            dr = lr - zr[i]
            di = li - zi[i]
            d2 = dr * dr + di * di
            mind2 = np.minimum(mind2, d2)
            acc = acc + wt[i] / d2
    return acc, mind2


# ---------------------------------------------------------------------------
# precomputed-d2 variants
# ---------------------------------------------------------------------------


def pre_w0_grid(d2, wt, t):
    m = d2.shape[0]
    with np.errstate(all="ignore"):
        f0 = t * _phi_pre(d2, wt, 0.0) - 1.0
        inside = f0 > 0.0
        fhi0 = t * _phi_pre(d2, wt, t) - 1.0
        at_top = inside & (fhi0 >= 0.0)
        solve = inside & ~at_top
        rt = np.sqrt(t)

        def f(mid):
            return t * _phi_pre(d2, wt, mid * mid) - 1.0

        center = _bracket_solve(
            f, np.zeros(m), f0, np.full(m, rt), fhi0, solve
        )
        w = np.where(solve, center, 0.0)
        w = np.where(at_top, rt, w)
    return w, inside.astype(np.uint8)


def pre_wreg_grid(d2, wt, t, eps):
    m = d2.shape[0]
    with np.errstate(all="ignore"):
        hi0 = 0.5 * (eps + np.sqrt(eps * eps + 4.0 * t))
        acc = _phi_pre(d2, wt, eps * eps)
        flo = (eps + t * (eps * acc)) - eps
        acc = _phi_pre(d2, wt, hi0 * hi0)
        fhi0 = (eps + t * (hi0 * acc)) - hi0
        at_top = fhi0 >= 0.0
        solve = ~at_top

        def f(mid):
            a = _phi_pre(d2, wt, mid * mid)
            return (eps + t * (mid * a)) - mid

        center = _bracket_solve(
            f, np.full(m, eps), flo, np.full(m, hi0), fhi0, solve
        )
        w = np.where(at_top, hi0, center)
    return w


def pre_sigma_grid(d2, wt, alpha, beta, eps):
    ab = alpha - beta
    L = np.log(alpha / beta)
    c0 = (eps * eps) * (ab * ab)
    m = d2.shape[0]

    def e0sq_of(sig):
        es = np.exp(sig)
        den = alpha - beta * es
        q = den * den
        return (c0 * es) / q

    def f(sig):
        acc = _phi_pre(d2, wt, e0sq_of(sig))
        return acc - sig / ab

    with np.errstate(all="ignore"):
        flo = f(0.0)
        degenerate = ~(flo > 0.0)
        fhi0 = f(np.full(m, L))
        at_top = ~degenerate & (fhi0 >= 0.0)
        solve = ~degenerate & ~at_top
        center = _bracket_solve(
            f, np.zeros(m), flo, np.full(m, L), fhi0, solve
        )
        out = np.where(solve, center, 0.0)
        out = np.where(at_top, L, out)
    return out


def pre_sums_grid(d2, wt, s):
    m = d2.shape[0]
    s2 = s * s
    a1 = np.zeros(m)
    a2 = np.zeros(m)
    with np.errstate(all="ignore"):
        for i in range(d2.shape[1]):
            den1 = d2[:, i] + s2
            den2 = den1 * den1
            a1 = a1 + wt[i] / den1
            a2 = a2 + wt[i] / den2
    return a1, a2


def pre_logdet_grid(d2, wt, s):
    s2 = s * s
    acc = np.zeros(d2.shape[0])
    with np.errstate(all="ignore"):
        for i in range(d2.shape[1]):
            acc = acc + wt[i] * np.log(d2[:, i] + s2)
    return acc


def pre_hinv0_grid(d2, wt):
    acc = np.zeros(d2.shape[0])
    mind2 = np.full(d2.shape[0], np.inf)
    with np.errstate(all="ignore"):
        for i in range(d2.shape[1]):
            v = d2[:, i]
            mind2 = np.minimum(mind2, v)
            acc = acc + wt[i] / v
    return acc, mind2


# ---------------------------------------------------------------------------
# cloud-in-cell deposit
# ---------------------------------------------------------------------------


def cic_deposit(px, py, mass, x0, y0, dx, dy, nx, ny):
    """Bilinear deposit; see the numba twin for the geometry.

    Accumulation is grouped by neighbor class here, so bins match the numba
    result only up to floating-point addition reordering (≤ 1e-12 · mass).
    """
    grid = np.zeros((ny, nx), np.float64)
    lost = 0.0
    mass = np.asarray(mass, np.float64)
    sel = mass != 0.0
    if not sel.any():
        return grid, lost
    mp = mass[sel]
    fx = (np.asarray(px, np.float64)[sel] - x0) / dx - 0.5
    fy = (np.asarray(py, np.float64)[sel] - y0) / dy - 0.5
    finite = np.isfinite(fx) & np.isfinite(fy)
    if not finite.all():
        lost += float(mp[~finite].sum())
        mp = mp[finite]
        fx = fx[finite]
        fy = fy[finite]
    ix = np.floor(fx).astype(np.int64)
    iy = np.floor(fy).astype(np.int64)
    tx = fx - ix
    ty = fy - iy
    for oy in range(2):
        wy = ty if oy == 1 else 1.0 - ty
        jy = iy + oy
        for ox in range(2):
            wx = tx if ox == 1 else 1.0 - tx
            jx = ix + ox
            contrib = mp * (wx * wy)
            ok = (jx >= 0) & (jx < nx) & (jy >= 0) & (jy < ny)
            if ok.any():
                np.add.at(grid, (jy[ok], jx[ok]), contrib[ok])
            bad = ~ok
            if bad.any():
                lost += float(contrib[bad].sum())
    return grid, lost

"""Finite-N matrix ensemble for the triangular elliptic operator.

Entries are jointly Gaussian, mean zero, with second moments

    E|a_ij|² = α/N (i<j),  β/N (i>j),  (α+β)/(2N) (i=j),
    E a_ij a_ji = γ/N,     E a_ij ā_ji = 0,
    E a_ii²    = γ/N,      all other cross-covariances 0.

For i<j the real vector (Re a_ij, Im a_ij, Re a_ji, Im a_ji) therefore has
covariance

    C4 = (1/2N)·[[α, 0, γ₁, γ₂], [0, α, γ₂, −γ₁],
                 [γ₁, γ₂, β, 0], [γ₂, −γ₁, 0, β]],      γ = γ₁ + iγ₂,

whose eigenvalues are ((α+β)/2 ± √((α−β)²/4 + |γ|²))/(2N), each twice — PSD
exactly when |γ| ≤ √(αβ).  The diagonal pair (Re a_ii, Im a_ii) has

    C2 = (1/4N)·[[α+β+2γ₁, 2γ₂], [2γ₂, α+β−2γ₁]],

PSD for |γ| ≤ (α+β)/2 by AM–GM.  Both derivations are unit-tested against a
symbolic expansion of the complex-moment constraints.  Sampling applies an
eigenvalue factorization V·√diag(w) of the covariance, with eigenvalues
clipped at 0 (tolerance −1e−14) so the PSD boundary |γ| = √(αβ) stays
admissible where a Cholesky factor would fail.

PRNG: counter-based Philox (numpy ``Philox``) keyed by
(seed, sample_index) as two unsigned 64-bit words — samples are independent
streams, reproducible bit-for-bit per (N, params, seed, sample_index), and
safe to draw in parallel.
"""

import numpy as np

from .models import NumericalFailure

_PSD_CLIP_TOL = -1e-14


def covariance_matrices(params, n):
    """(C4, C2): real covariances of an off-diagonal pair and a diagonal entry."""
    a, b = params.alpha, params.beta
    g1, g2 = params.gamma.real, params.gamma.imag
    c4 = np.array(
        [
            [a, 0.0, g1, g2],
            [0.0, a, g2, -g1],
            [g1, g2, b, 0.0],
            [g2, -g1, 0.0, b],
        ]
    ) / (2.0 * n)
    c2 = np.array(
        [
            [a + b + 2.0 * g1, 2.0 * g2],
            [2.0 * g2, a + b - 2.0 * g1],
        ]
    ) / (4.0 * n)
    return c4, c2


def _psd_factor(cov):
    """F with F·Fᵀ = cov, eigenvalues clipped at 0 (reject below −1e−14)."""
    w, v = np.linalg.eigh(cov)
    if w.min() < _PSD_CLIP_TOL:
        raise NumericalFailure(
            f"covariance not positive semidefinite (min eigenvalue {w.min()!r})"
        )
    return v * np.sqrt(np.clip(w, 0.0, None))


class EnsembleSample:
    """One drawn matrix of the ensemble, with lazily computed eigenvalues."""

    __slots__ = ("n", "params", "seed", "sample_index", "matrix", "_eigs")

    def __init__(self, n, params, seed, sample_index, matrix):
        self.n = n
        self.params = params
        self.seed = seed
        self.sample_index = sample_index
        self.matrix = matrix
        self._eigs = None

    @property
    def eigenvalues(self):
        if self._eigs is None:
            self._eigs = eigenvalues(self.matrix)
        return self._eigs


def sample_ensemble(n, params, seed, sample_index=0):
    """Draw one N×N matrix of the ensemble (see module docstring).

    Draw order is fixed (all off-diagonal pair vectors in ``triu_indices``
    order, then the diagonal), which is part of the determinism contract.
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"ensemble needs N >= 2, got {n!r}")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must fit in uint64, got {seed!r}")
    sample_index = int(sample_index)
    if sample_index < 0:
        raise ValueError(f"sample_index must be >= 0, got {sample_index!r}")
    c4, c2 = covariance_matrices(params, n)
    f4 = _psd_factor(c4)
    f2 = _psd_factor(c2)
    rng = np.random.Generator(
        np.random.Philox(key=np.array([seed, sample_index], dtype=np.uint64))
    )
    iu, ju = np.triu_indices(n, 1)
    pair = rng.standard_normal((iu.size, 4)) @ f4.T
    diag = rng.standard_normal((n, 2)) @ f2.T
    mat = np.zeros((n, n), np.complex128)
    mat[iu, ju] = pair[:, 0] + 1j * pair[:, 1]
    mat[ju, iu] = pair[:, 2] + 1j * pair[:, 3]
    mat[np.arange(n), np.arange(n)] = diag[:, 0] + 1j * diag[:, 1]
    return EnsembleSample(n, params, seed, sample_index, mat)


def eigenvalues(matrix):
    """Eigenvalues of a dense complex matrix (order unspecified)."""
    matrix = np.asarray(matrix, np.complex128)
    if not np.all(np.isfinite(matrix.real)) or not np.all(np.isfinite(matrix.imag)):
        raise ValueError("matrix entries must be finite")
    try:
        return np.linalg.eigvals(matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigensolver failed: {exc}") from exc


def x0_matrix(model, n):
    """N×N approximant of x0: atoms/nodes repeated by largest-remainder
    rounding of wᵢ·N (measure models), or block-diagonal repetition
    (matrix models, whose size must divide N)."""
    n = int(n)
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n!r}")
    if model.is_matrix:
        if n % model.n != 0:
            raise ValueError(
                f"matrix model size {model.n} does not divide N = {n}"
            )
        return np.kron(np.eye(n // model.n), model.entries)
    z = model.zr + 1j * model.zi
    target = model.wt * n
    counts = np.floor(target).astype(np.int64)
    need = n - int(counts.sum())
    if need > 0:
        # stable argsort of the negated remainders: ties go to lower index
        order = np.argsort(-(target - counts), kind="stable")
        counts[order[:need]] += 1
    n_atoms = model.atoms_z.size
    if np.any(counts[:n_atoms] < 1):
        raise ValueError(
            f"N = {n} too small to represent all {n_atoms} positive-weight atoms"
        )
    return np.diag(np.repeat(z, counts))


# ---------------------------------------------------------------------------
# spectrum scoring
# ---------------------------------------------------------------------------


class SpectrumScore:
    """Observed-vs-expected eigenvalue counts on a coarse grid.

    ``observed``/``expected`` are coarse_n × coarse_n arrays (y row-major,
    matching DensityGrid); ``n_outside_window`` counts eigenvalues that fell
    off the predicted grid's window entirely.  ``sup_cell_discrepancy`` is
    max |observed−expected|/expected over cells with expected ≥ 20;
    ``inside_support_fraction`` the fraction of eigenvalues landing in fine
    cells of strictly positive predicted density.
    """

    __slots__ = (
        "observed",
        "expected",
        "sup_cell_discrepancy",
        "inside_support_fraction",
        "total",
        "n_outside_window",
        "min_expected",
    )

    def __init__(self, observed, expected, sup_cell_discrepancy,
                 inside_support_fraction, total, n_outside_window, min_expected):
        self.observed = observed
        self.expected = expected
        self.sup_cell_discrepancy = sup_cell_discrepancy
        self.inside_support_fraction = inside_support_fraction
        self.total = total
        self.n_outside_window = n_outside_window
        self.min_expected = min_expected


def compare_spectrum(eig_sets, predicted, coarse_n=8, min_expected=20.0):
    """Score empirical eigenvalue sets against a predicted DensityGrid.

    ``eig_sets`` is a sequence of per-sample eigenvalue arrays (with any x0
    shift already applied by the sampler).  Counts are binned on a coarse
    grid over the predicted window; expected counts are total·cellmass/mass.
    """
    if len(eig_sets) < 1:
        raise ValueError("need at least one eigenvalue sample")
    mass = predicted.mass
    if not (mass > 0.9):
        raise ValueError(f"predicted grid mass {mass!r} too small (need > 0.9)")
    coarse_n = int(coarse_n)
    eigs = np.concatenate([np.asarray(e, np.complex128).ravel() for e in eig_sets])
    total = eigs.size

    x_min, y_min = predicted.x_min, predicted.y_min
    cdx = (predicted.x_max - x_min) / coarse_n
    cdy = (predicted.y_max - y_min) / coarse_n

    # observed counts
    ix = np.floor((eigs.real - x_min) / cdx).astype(np.int64)
    iy = np.floor((eigs.imag - y_min) / cdy).astype(np.int64)
    in_win = (ix >= 0) & (ix < coarse_n) & (iy >= 0) & (iy < coarse_n)
    observed = np.zeros((coarse_n, coarse_n), np.float64)
    np.add.at(observed, (iy[in_win], ix[in_win]), 1.0)

    # expected counts: predicted mass per coarse cell
    lr, li = predicted.cells()
    cell_mass = predicted.values.reshape(-1) * (predicted.dx * predicted.dy)
    jx = np.floor((lr - x_min) / cdx).astype(np.int64)
    jy = np.floor((li - y_min) / cdy).astype(np.int64)
    np.clip(jx, 0, coarse_n - 1, out=jx)
    np.clip(jy, 0, coarse_n - 1, out=jy)
    coarse_mass = np.zeros((coarse_n, coarse_n), np.float64)
    np.add.at(coarse_mass, (jy, jx), cell_mass)
    expected = total * coarse_mass / mass

    scored = expected >= min_expected
    if scored.any():
        sup = float(
            np.max(np.abs(observed[scored] - expected[scored]) / expected[scored])
        )
    else:
        sup = 0.0

    # support membership on the fine grid
    fx = np.floor((eigs.real - x_min) / predicted.dx).astype(np.int64)
    fy = np.floor((eigs.imag - y_min) / predicted.dy).astype(np.int64)
    ok = (fx >= 0) & (fx < predicted.nx) & (fy >= 0) & (fy < predicted.ny)
    inside = np.zeros(total, bool)
    inside[ok] = predicted.values[fy[ok], fx[ok]] > 0.0
    frac = float(inside.sum()) / total if total else 1.0

    return SpectrumScore(
        observed,
        expected,
        sup,
        frac,
        total,
        int(total - in_win.sum()),
        float(min_expected),
    )


def score_report(score):
    """Structured text report with the per-cell count table."""
    lines = [
        f"total_eigenvalues {score.total}",
        f"outside_window {score.n_outside_window}",
        f"sup_cell_discrepancy {score.sup_cell_discrepancy:.17g}",
        f"inside_support_fraction {score.inside_support_fraction:.17g}",
        f"min_expected {score.min_expected:.17g}",
        "cell_table ix iy observed expected",
    ]
    ny, nx = score.observed.shape
    for iy in range(ny):
        for ix in range(nx):
            lines.append(
                f"cell {ix} {iy} {score.observed[iy, ix]:.17g} "
                f"{score.expected[iy, ix]:.17g}"
            )
    return "\n".join(lines) + "\n"


def write_eigenvalues_csv(path, eig_sets):
    """Dump eigenvalues as CSV with header ``re,im``."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("re,im\n")
        for eigs in eig_sets:
            for z in np.asarray(eigs, np.complex128).ravel():
                fh.write(f"{z.real:.17g},{z.imag:.17g}\n")

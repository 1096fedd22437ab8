import numpy as np
import pytest

from tribrown.density import DensityGrid, fill_grid
from tribrown.models import DenseMatrixModel, MeasureModel, zero_model
from tribrown.randmat import (
    compare_spectrum,
    covariance_matrices,
    eigenvalues,
    sample_ensemble,
    score_report,
    write_eigenvalues_csv,
    x0_matrix,
)
from tribrown.subordination import EllipticParams


def _moment_constraints(c4, c2, alpha, beta, gamma, n):
    """The complex second moments encoded by the real covariance blocks."""
    e_abs01 = c4[0, 0] + c4[1, 1]
    e_abs10 = c4[2, 2] + c4[3, 3]
    e_prod = complex(c4[0, 2] - c4[1, 3], c4[0, 3] + c4[1, 2])
    e_mixed = complex(c4[0, 2] + c4[1, 3], c4[1, 2] - c4[0, 3])
    e_sq01 = complex(c4[0, 0] - c4[1, 1], 2 * c4[0, 1])
    e_absd = c2[0, 0] + c2[1, 1]
    e_sqd = complex(c2[0, 0] - c2[1, 1], 2 * c2[0, 1])
    return {
        "E|a01|^2": (e_abs01, alpha / n),
        "E|a10|^2": (e_abs10, beta / n),
        "E a01 a10": (e_prod, gamma / n),
        "E a01 conj(a10)": (e_mixed, 0.0),
        "E a01^2": (e_sq01, 0.0),
        "E|a00|^2": (e_absd, (alpha + beta) / (2 * n)),
        "E a00^2": (e_sqd, gamma / n),
    }


def test_covariance_encodes_moments():
    for alpha, beta, gamma in (
        (1.0, 1.0, 0.0),
        (2.0, 1.0, 0.5),
        (2.0, 1.0, 0.3 + 0.9j),
        (0.5, 3.0, -1.1j),
    ):
        n = 40
        c4, c2 = covariance_matrices(EllipticParams(alpha, beta, gamma), n)
        for name, (got, want) in _moment_constraints(
            c4, c2, alpha, beta, complex(gamma), n
        ).items():
            assert got == pytest.approx(want, abs=1e-15), name
        assert np.allclose(c4, c4.T) and np.allclose(c2, c2.T)
        assert np.all(np.linalg.eigvalsh(c4) >= -1e-14 / n)


def test_covariance_boundary_gamma():
    params = EllipticParams(2.0, 2.0, 2.0)  # |gamma| = sqrt(alpha*beta)
    c4, _ = covariance_matrices(params, 10)
    w = np.linalg.eigvalsh(c4)
    assert w.min() >= -1e-14
    # boundary still samples fine
    m = sample_ensemble(8, params, 1).matrix
    assert np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))


def test_seed_determinism():
    params = EllipticParams(2.0, 1.0, 0.4 + 0.2j)
    a = sample_ensemble(16, params, 123, 5).matrix
    b = sample_ensemble(16, params, 123, 5).matrix
    assert np.array_equal(a, b)
    c = sample_ensemble(16, params, 123, 6).matrix
    assert not np.array_equal(a, c)
    d = sample_ensemble(16, params, 124, 5).matrix
    assert not np.array_equal(a, d)


def test_sample_ensemble_validation():
    params = EllipticParams.from_t(1.0)
    with pytest.raises(ValueError):
        sample_ensemble(1, params, 0)
    with pytest.raises(ValueError):
        sample_ensemble(4, params, -1)
    with pytest.raises(ValueError):
        sample_ensemble(4, params, 0, -2)


def test_pair_moments_statistical():
    # one off-diagonal pair sampled through the full assembly path
    params = EllipticParams(2.0, 1.0, 0.5)
    m = 20_000
    a01 = np.empty(m, np.complex128)
    a10 = np.empty(m, np.complex128)
    for k in range(m):
        mat = sample_ensemble(2, params, 314, k).matrix
        a01[k], a10[k] = mat[0, 1], mat[1, 0]
    for sample, target in (
        (np.abs(a01) ** 2, 1.0),     # alpha/N
        (np.abs(a10) ** 2, 0.5),     # beta/N
        ((a01 * a10).real, 0.25),    # gamma/N
        ((a01 * a10).imag, 0.0),
        ((a01 * np.conj(a10)).real, 0.0),
    ):
        se = np.std(sample, ddof=1) / np.sqrt(m)
        assert abs(np.mean(sample) - target) <= 5.0 * se


def test_x0_matrix_atoms(atoms_pm1):
    x = x0_matrix(atoms_pm1, 4)
    assert np.array_equal(x, np.diag([1.0 + 0j, 1.0, -1.0, -1.0]))
    assert np.array_equal(x0_matrix(zero_model(), 3), np.zeros((3, 3)))
    m = MeasureModel([(2.0, 0.6), (-1.0, 0.4)], kind="selfadjoint")
    x = x0_matrix(m, 5)
    assert np.array_equal(np.diag(x), [2, 2, 2, -1, -1])


def test_x0_matrix_kron():
    base = DenseMatrixModel(np.array([[0.0, 1.0], [0.0, 0.0]]))
    x = x0_matrix(base, 6)
    assert x.shape == (6, 6)
    assert np.array_equal(x[:2, :2], base.entries)
    with pytest.raises(ValueError):
        x0_matrix(base, 5)


def test_x0_matrix_unrepresentable_weight():
    m = MeasureModel([(0.0, 1e-6), (1.0, 1.0 - 1e-6)], kind="selfadjoint")
    with pytest.raises(ValueError):
        x0_matrix(m, 10)


def test_eigenvalues_basics():
    assert np.allclose(np.sort(eigenvalues(np.diag([1.0, 2.0, 3.0])).real), [1, 2, 3])
    jordan = np.diag([1.0, 1.0], 1)  # nilpotent 3x3
    assert np.max(np.abs(eigenvalues(jordan))) <= 1e-4
    comp = np.array([[0.0, 1.0], [1.0, 0.0]])  # companion of z^2 - 1
    assert np.allclose(np.sort(eigenvalues(comp).real), [-1, 1])
    with pytest.raises(ValueError):
        eigenvalues(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_ginibre_radius():
    eig = sample_ensemble(300, EllipticParams.from_t(1.0), 2026).eigenvalues
    r = np.abs(eig).max()
    assert 0.9 <= r <= 1.15


def test_compare_spectrum_exact_uniform():
    # synthetic: flat density, eigenvalues on an exactly matching lattice
    nx = ny = 40
    vals = np.full((ny, nx), 1.0 / 4.0)  # unit mass on [-1,1]^2
    grid = DensityGrid((-1.0, 1.0, -1.0, 1.0), nx, ny,
                       vals, EllipticParams.from_t(1.0), 0.0, "circ")
    xs = (np.arange(nx) + 0.5) * (2.0 / nx) - 1.0
    pts = np.array([complex(x, y) for x in xs for y in xs])
    score = compare_spectrum([pts, pts], grid, coarse_n=4)
    assert score.total == 2 * nx * ny
    assert score.n_outside_window == 0
    assert score.sup_cell_discrepancy <= 1e-12
    assert score.inside_support_fraction == 1.0
    assert np.sum(score.observed) == score.total
    report = score_report(score)
    assert "sup_cell_discrepancy" in report
    assert f"total_eigenvalues {score.total}" in report


def test_compare_spectrum_outside_window():
    vals = np.full((8, 8), 1.0 / 4.0)
    grid = DensityGrid((-1.0, 1.0, -1.0, 1.0), 8, 8,
                       vals, EllipticParams.from_t(1.0), 0.0, "circ")
    pts = np.array([0.0 + 0.0j, 5.0 + 0.0j])
    score = compare_spectrum([pts], grid)
    assert score.n_outside_window == 1
    assert score.inside_support_fraction == 0.5
    with pytest.raises(ValueError):
        compare_spectrum([], grid)


def test_compare_spectrum_needs_mass():
    vals = np.zeros((8, 8))
    grid = DensityGrid((-1.0, 1.0, -1.0, 1.0), 8, 8,
                       vals, EllipticParams.from_t(1.0), 0.0, "circ")
    with pytest.raises(ValueError):
        compare_spectrum([np.array([0.0 + 0.0j])], grid)


def test_spectrum_converges_with_n(atoms_pm1):
    params = EllipticParams.from_t(1.0)
    predicted = fill_grid(atoms_pm1, params, 0.0, (-2.4, 2.4, -1.5, 1.5), 101, 101)

    def sup_at(n, seed):
        x0 = x0_matrix(atoms_pm1, n)
        eigs = [
            eigenvalues(x0 + sample_ensemble(n, params, seed, k).matrix)
            for k in range(2)
        ]
        return compare_spectrum(eigs, predicted, coarse_n=4).sup_cell_discrepancy

    seeds = (11, 12, 13, 14)
    coarse = np.mean([sup_at(100, s) for s in seeds])
    fine = np.mean([sup_at(500, s) for s in seeds])
    assert fine < coarse


def test_eigenvalue_csv(tmp_path):
    sets = [np.array([1.0 + 2.0j, -0.5j]), np.array([0.25 + 0.0j])]
    path = tmp_path / "eig.csv"
    write_eigenvalues_csv(path, sets)
    lines = path.read_text().splitlines()
    assert lines[0] == "re,im"
    assert len(lines) == 4
    assert lines[1].split(",")[0] == "1"

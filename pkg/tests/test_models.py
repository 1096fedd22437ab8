import numpy as np
import pytest

from tribrown.models import (
    DenseMatrixModel,
    MeasureModel,
    ModelError,
    h_inv_at_zero,
    load_model,
    parse_model,
    resolve_model,
    trace_bundle,
    zero_model,
)


def test_trace_bundle_two_atoms(atoms_pm1):
    tb = trace_bundle(atoms_pm1, 0.0, 1.0)
    assert tb.h_inv == pytest.approx(0.5, abs=1e-15)
    assert tb.h_inv_sq == pytest.approx(0.25, abs=1e-15)
    assert tb.hk_inv == tb.h_inv_sq
    # contributions of the two atoms cancel
    assert abs(tb.cross) <= 1e-15
    assert abs(tb.p0) <= 1e-15


def test_trace_bundle_zero_model(zero):
    tb = trace_bundle(zero, 0.3, 0.5)
    d = 0.3**2 + 0.5**2
    assert tb.h_inv == pytest.approx(1.0 / d, rel=1e-15)
    assert tb.h_inv_sq == pytest.approx(1.0 / d**2, rel=1e-15)
    assert tb.cross == pytest.approx(0.3 / d**2, rel=1e-14)
    assert tb.p0 == pytest.approx(0.3 / d, rel=1e-14)


def test_trace_bundle_matrix_matches_measure(atoms_pm1):
    mat = DenseMatrixModel(np.diag([1.0, -1.0]))
    a = trace_bundle(mat, 0.0, 1.0)
    b = trace_bundle(atoms_pm1, 0.0, 1.0)
    assert a.h_inv == pytest.approx(0.5, abs=1e-12)
    for field in ("h_inv", "h_inv_sq", "hk_inv", "cross", "p0"):
        assert getattr(a, field) == pytest.approx(getattr(b, field), abs=1e-12)


def test_measure_vs_matrix_oracle(normal_3):
    # weights 0.5/0.3/0.2 as a diagonal matrix with 5/3/2 repeats
    z = np.concatenate(
        [np.repeat(normal_3.atoms_z[i], c) for i, c in enumerate((5, 3, 2))]
    )
    mat = DenseMatrixModel(np.diag(z))
    rng = np.random.default_rng(7)
    for _ in range(20):
        lam = complex(*rng.uniform(-2, 2, 2))
        s = rng.uniform(0.05, 2.0)
        a = trace_bundle(normal_3, lam, s)
        b = trace_bundle(mat, lam, s)
        for field in ("h_inv", "h_inv_sq", "hk_inv", "cross", "p0"):
            va, vb = getattr(a, field), getattr(b, field)
            assert abs(va - vb) <= 1e-10 * max(1.0, abs(va))


def test_conjugation(normal_3):
    conj = MeasureModel(
        [(np.conj(z), w) for z, w in zip(normal_3.atoms_z, normal_3.atoms_w)],
        kind="normal",
    )
    lam = 0.7 - 0.4j
    a = trace_bundle(normal_3, lam, 0.8)
    b = trace_bundle(conj, np.conj(lam), 0.8)
    assert b.cross == pytest.approx(np.conj(a.cross), abs=1e-15)
    assert b.p0 == pytest.approx(np.conj(a.p0), abs=1e-15)
    assert b.h_inv == pytest.approx(a.h_inv, abs=1e-15)


def test_h_inv_monotone_in_s(atoms_pm1, matrix_8):
    for model in (atoms_pm1, matrix_8):
        vals = [trace_bundle(model, 0.3 + 0.2j, s).h_inv for s in (0.2, 0.5, 1.0, 2.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_bundle_inequalities(normal_3, matrix_8):
    rng = np.random.default_rng(3)
    for model in (normal_3, matrix_8):
        for _ in range(10):
            lam = complex(*rng.uniform(-2, 2, 2))
            s = rng.uniform(0.1, 1.5)
            tb = trace_bundle(model, lam, s)
            assert tb.h_inv_sq <= tb.h_inv / s**2 * (1 + 1e-12)
            assert tb.hk_inv <= tb.h_inv_sq * (1 + 1e-12)


def test_h_inv_at_zero(zero, atoms_pm1):
    assert h_inv_at_zero(zero, 0.5) == pytest.approx(4.0, rel=1e-15)
    assert h_inv_at_zero(zero, 0.0) == np.inf
    assert h_inv_at_zero(atoms_pm1, 0.0) == pytest.approx(1.0, rel=1e-15)
    assert h_inv_at_zero(atoms_pm1, 1.0) == np.inf
    mat = DenseMatrixModel(np.diag([1.0, -1.0]))
    assert h_inv_at_zero(mat, 1.0) == np.inf
    assert h_inv_at_zero(mat, 0.0) == pytest.approx(1.0, rel=1e-12)


def test_trace_bundle_argument_validation(zero):
    with pytest.raises(ValueError):
        trace_bundle(zero, 0.0, 0.0)
    with pytest.raises(ValueError):
        trace_bundle(zero, complex(np.nan, 0), 1.0)


def test_weights_must_sum_to_one():
    with pytest.raises(ModelError):
        MeasureModel([(0.0, 0.4), (1.0, 0.4)], kind="selfadjoint")
    with pytest.raises(ModelError):
        MeasureModel([(0.0, -0.2), (1.0, 1.2)], kind="selfadjoint")
    with pytest.raises(ModelError):
        MeasureModel([(np.inf, 1.0)], kind="selfadjoint")
    with pytest.raises(ModelError):
        MeasureModel([(0.3j, 1.0)], kind="selfadjoint")
    with pytest.raises(ModelError):
        MeasureModel([], kind="selfadjoint")


def test_zero_weight_atoms_dropped():
    m = MeasureModel([(0.0, 1.0), (2.0, 0.0)], kind="selfadjoint")
    assert m.n_nodes == 1
    # the dropped atom no longer forces the domain open at its location
    assert np.isfinite(h_inv_at_zero(m, 2.0))


def test_matrix_validation():
    with pytest.raises(ModelError):
        DenseMatrixModel(np.zeros((2, 3)))
    with pytest.raises(ModelError):
        DenseMatrixModel([[np.nan]])


def test_parse_selfadjoint_and_comments(atoms_pm1):
    m = parse_model("""
    # two symmetric atoms
    selfadjoint
    atom  1  0.5   # right
    atom -1  0.5
    """)
    assert m.kind == "selfadjoint"
    assert np.array_equal(np.sort(m.zr), np.sort(atoms_pm1.zr))


def test_parse_semicolons_and_zero():
    m = resolve_model("selfadjoint; atom 1 0.5; atom -1 0.5")
    assert m.n_nodes == 2
    z = resolve_model("zero")
    assert z.zr.tolist() == [0.0]
    assert zero_model().kind == "selfadjoint"


def test_parse_normal_nodes():
    m = parse_model("normal\natom 0 1 0.5\nnode 0.5 -0.5 0.5")
    assert m.atoms_z.tolist() == [1j]
    assert m.nodes_z.tolist() == [0.5 - 0.5j]


def test_parse_matrix():
    m = parse_model("matrix 2\nrow 1 0 0 0\nrow 0 0 -1 0")
    assert m.is_matrix
    assert np.array_equal(m.entries, np.diag([1.0 + 0j, -1.0]))


def test_parse_errors():
    for bad in (
        "",
        "ellipse",
        "zero extra",
        "selfadjoint 3",
        "selfadjoint\natom 1",
        "selfadjoint\natom 1 x",
        "normal\natom 1 0.5",
        "matrix\nrow 1 0",
        "matrix 2\nrow 1 0 0 0",
        "matrix 1\nrow 1",
    ):
        with pytest.raises(ModelError):
            parse_model(bad)


def test_load_model_roundtrip(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("selfadjoint\natom 1 0.5\natom -1 0.5\n")
    m = load_model(p)
    assert m.n_nodes == 2
    assert resolve_model(str(p)).n_nodes == 2

"""Spectral models of the deterministic summand x0 and their trace functionals.

Two families:

* measure models (``selfadjoint`` / ``normal``): x0 is normal with spectral
  measure given by point masses — genuine atoms plus user-supplied quadrature
  nodes for any absolutely continuous part.  Trace functionals reduce to
  weighted node sums.
* ``matrix`` models: x0 is an N×N complex matrix (the finite-dimensional
  approximant for non-normal operators), with the normalized trace tr/N.

All models are immutable after construction and safe to share across threads.

Quadrature accuracy for absolutely continuous spectra rests with the caller's
node choice; for heavy-tailed measures the truncation error of the supplied
nodes is not monitored here.
"""

import numpy as np

from .backend import kernels

#: absolute tolerance below which λ counts as sitting on an atom / eigenvalue
ATOM_TOL = 1e-14

_WEIGHT_SUM_TOL = 1e-12


class ModelError(ValueError):
    """Invalid model data or an unreadable model description."""


class NumericalFailure(RuntimeError):
    """A numerical routine failed to produce a usable value.

    Attributes
    ----------
    lam : complex or None
        The λ at which the failure occurred, when meaningful.
    """

    def __init__(self, message, lam=None):
        super().__init__(message)
        self.lam = lam


def _as_cells(lam):
    lam = np.asarray(lam, np.complex128)
    return np.ascontiguousarray(lam.real, np.float64), np.ascontiguousarray(
        lam.imag, np.float64
    )


class MeasureModel:
    """x0 normal, spectral measure = atoms + quadrature nodes.

    Parameters
    ----------
    atoms, abscont : sequences of (location, weight)
        Locations are real for ``kind="selfadjoint"``, complex for
        ``kind="normal"``.  Weights must be ≥ 0 and sum (over both lists)
        to 1 within 1e-12.  Zero-weight entries are dropped: they carry no
        spectral mass, and keeping them would poison the kernel node sums
        with 0/0 at coincident λ.
    """

    is_matrix = False

    def __init__(self, atoms, abscont=(), kind="normal"):
        if kind not in ("selfadjoint", "normal"):
            raise ModelError(f"unknown measure model kind {kind!r}")
        self.kind = kind
        az, aw = self._clean(atoms, kind)
        nz, nw = self._clean(abscont, kind)
        total = float(np.sum(np.concatenate([aw, nw]))) if (aw.size + nw.size) else 0.0
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            raise ModelError(f"weights sum to {total!r}, expected 1 within 1e-12")
        keep_a = aw > 0.0
        keep_n = nw > 0.0
        self.atoms_z = az[keep_a]
        self.atoms_w = aw[keep_a]
        self.nodes_z = nz[keep_n]
        self.nodes_w = nw[keep_n]
        if self.atoms_z.size + self.nodes_z.size == 0:
            raise ModelError("model has no positive-weight atoms or nodes")
        z = np.concatenate([self.atoms_z, self.nodes_z])
        w = np.concatenate([self.atoms_w, self.nodes_w])
        self.zr = np.ascontiguousarray(z.real, np.float64)
        self.zi = np.ascontiguousarray(z.imag, np.float64)
        self.wt = np.ascontiguousarray(w, np.float64)

    @staticmethod
    def _clean(rows, kind):
        rows = list(rows)
        z = np.asarray([r[0] for r in rows], np.complex128)
        w = np.asarray([r[1] for r in rows], np.float64)
        if z.size and not (np.all(np.isfinite(z.real)) and np.all(np.isfinite(z.imag))):
            raise ModelError("non-finite location")
        if w.size and (not np.all(np.isfinite(w)) or np.any(w < 0.0)):
            raise ModelError("weights must be finite and >= 0")
        if kind == "selfadjoint" and z.size and np.any(z.imag != 0.0):
            raise ModelError("selfadjoint model locations must be real")
        return z, w

    @property
    def n_nodes(self):
        return self.zr.size

    def __repr__(self):
        return (
            f"MeasureModel(kind={self.kind!r}, atoms={self.atoms_z.size}, "
            f"nodes={self.nodes_z.size})"
        )


class DenseMatrixModel:
    """x0 given as an N×N complex matrix with trace functional tr/N."""

    is_matrix = True
    kind = "matrix"

    def __init__(self, entries):
        x = np.asarray(entries, np.complex128)
        if x.ndim != 2 or x.shape[0] != x.shape[1] or x.shape[0] < 1:
            raise ModelError(f"matrix model needs a square matrix, got shape {x.shape}")
        if not np.all(np.isfinite(x.real)) or not np.all(np.isfinite(x.imag)):
            raise ModelError("matrix entries must be finite")
        self.entries = x
        self.n = x.shape[0]
        self.wt = np.full(self.n, 1.0 / self.n)
        self._eigvals = None

    @property
    def eigvals(self):
        if self._eigvals is None:
            self._eigvals = np.linalg.eigvals(self.entries)
        return self._eigvals

    def d2_rows(self, lr, li, chunk=2048):
        """Squared singular values of (λI − x0), one row per λ-cell."""
        m = lr.size
        eye = np.eye(self.n)
        out = np.empty((m, self.n), np.float64)
        for a in range(0, m, chunk):
            b = min(a + chunk, m)
            lam = (lr[a:b] + 1j * li[a:b])[:, None, None]
            sv = np.linalg.svd(lam * eye - self.entries, compute_uv=False)
            out[a:b] = sv * sv
        return out

    def __repr__(self):
        return f"DenseMatrixModel(n={self.n})"


def zero_model():
    """x0 = 0."""
    return MeasureModel([(0.0, 1.0)], kind="selfadjoint")


# ---------------------------------------------------------------------------
# trace functionals
# ---------------------------------------------------------------------------


class TraceBundle:
    """Trace data of h = (λ−x0)*(λ−x0)+s² and k = (λ−x0)(λ−x0)*+s².

    Fields (arrays over λ-cells): ``h_inv`` = φ(h⁻¹), ``h_inv_sq`` = φ(h⁻²),
    ``hk_inv`` = φ(h⁻¹k⁻¹), ``cross`` = φ((λ−x0)h⁻²), ``p0`` = φ((λ−x0)*k⁻¹).
    For normal x0, h = k and hk_inv coincides with h_inv_sq.
    """

    __slots__ = ("h_inv", "h_inv_sq", "hk_inv", "cross", "p0")

    def __init__(self, h_inv, h_inv_sq, hk_inv, cross, p0):
        self.h_inv = h_inv
        self.h_inv_sq = h_inv_sq
        self.hk_inv = hk_inv
        self.cross = cross
        self.p0 = p0


def _matrix_bundle_extras(model, lr, li, s, chunk=512):
    """(hk_inv, cross, p0) for a matrix model via Hermitian inverses."""
    m = lr.size
    n = model.n
    eye = np.eye(n)
    hk = np.empty(m, np.float64)
    cross = np.empty(m, np.complex128)
    p0 = np.empty(m, np.complex128)
    for a in range(0, m, chunk):
        b = min(a + chunk, m)
        lam = (lr[a:b] + 1j * li[a:b])[:, None, None]
        s2 = (np.asarray(s[a:b], np.float64) ** 2)[:, None, None]
        bb = lam * eye - model.entries
        bh = np.conj(np.swapaxes(bb, 1, 2))
        try:
            hi = np.linalg.inv(bh @ bb + s2 * eye)
            ki = np.linalg.inv(bb @ bh + s2 * eye)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"singular resolvent solve: {exc}") from exc
        hk[a:b] = np.einsum("bij,bij->b", hi, np.conj(ki)).real / n
        cross[a:b] = np.einsum("bij,bji->b", bb, hi @ hi) / n
        p0[a:b] = np.einsum("bij,bij->b", np.conj(bb), ki) / n
    return hk, cross, p0


def trace_bundle_grid(model, lr, li, s, d2=None, backend=None):
    """TraceBundle over flat cell arrays; s per cell (may be 0 off-domain,
    in which case the corresponding entries are only meaningful if no node
    coincides with λ)."""
    s = np.asarray(s, np.float64)
    if model.is_matrix:
        if d2 is None:
            d2 = model.d2_rows(lr, li)
        h1, h2 = kernels(backend).pre_sums_grid(d2, model.wt, s)
        hk, cross, p0 = _matrix_bundle_extras(model, lr, li, s)
        return TraceBundle(h1, h2, hk, cross, p0)
    h1, h2, crr, cri, p0r, p0i = kernels(backend).nodes_bundle_grid(
        model.zr, model.zi, model.wt, lr, li, s
    )
    return TraceBundle(h1, h2, h2, crr + 1j * cri, p0r + 1j * p0i)


def phi_h_inv_grid(model, lr, li, s, d2=None, backend=None):
    """φ(h⁻¹(λ, s)) per cell; cheap residual/diagnostic evaluation."""
    s = np.asarray(s, np.float64)
    if model.is_matrix:
        if d2 is None:
            d2 = model.d2_rows(lr, li)
        return kernels(backend).pre_sums_grid(d2, model.wt, s)[0]
    return kernels(backend).nodes_bundle_grid(
        model.zr, model.zi, model.wt, lr, li, s
    )[0]


def trace_bundle(model, lam, s):
    """Scalar TraceBundle at one (λ, s), s > 0."""
    lam = complex(lam)
    s = float(s)
    if not (np.isfinite(lam.real) and np.isfinite(lam.imag)):
        raise ValueError(f"non-finite lambda {lam!r}")
    if not (s > 0.0) or not np.isfinite(s):
        raise ValueError(f"trace_bundle requires s > 0, got {s!r}")
    lr, li = _as_cells([lam])
    tb = trace_bundle_grid(model, lr, li, np.array([s]))
    return TraceBundle(
        float(tb.h_inv[0]),
        float(tb.h_inv_sq[0]),
        float(tb.hk_inv[0]),
        complex(tb.cross[0]),
        complex(tb.p0[0]),
    )


def logdet_grid(model, lr, li, s, d2=None, backend=None):
    """φ(log((λ−x0)*(λ−x0) + s²)) per cell; −inf if a node sits at λ, s=0."""
    s = np.asarray(s, np.float64)
    if model.is_matrix:
        if d2 is None:
            d2 = model.d2_rows(lr, li)
        return kernels(backend).pre_logdet_grid(d2, model.wt, s)
    return kernels(backend).nodes_logdet_grid(model.zr, model.zi, model.wt, lr, li, s)


def hinv0_grid(model, lr, li, d2=None, backend=None):
    """(φ(|λ−x0|⁻²), min squared distance to a node/eigenvalue) per cell."""
    if model.is_matrix:
        if d2 is None:
            d2 = model.d2_rows(lr, li)
        return kernels(backend).pre_hinv0_grid(d2, model.wt)
    return kernels(backend).nodes_hinv0_grid(model.zr, model.zi, model.wt, lr, li)


def h_inv_at_zero(model, lam):
    """φ(|λ−x0|⁻²) ∈ (0, +∞]; +∞ when λ sits on an atom or eigenvalue.

    The s↓0 monotone limit of h_inv.  Coincidence uses the absolute
    tolerance ``ATOM_TOL`` against atoms (measure models) or eigenvalues
    (matrix models); quadrature nodes hit exactly also give +∞ through
    IEEE division.
    """
    lam = complex(lam)
    if not (np.isfinite(lam.real) and np.isfinite(lam.imag)):
        raise ValueError(f"non-finite lambda {lam!r}")
    if model.is_matrix:
        if model.eigvals.size and np.min(np.abs(lam - model.eigvals)) <= ATOM_TOL:
            return np.inf
    elif model.atoms_z.size:
        if np.min(np.abs(lam - model.atoms_z)) <= ATOM_TOL:
            return np.inf
    lr, li = _as_cells([lam])
    acc, _ = hinv0_grid(model, lr, li)
    return float(acc[0])


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------


def parse_model(text):
    """Build a model from its text description.

    Grammar (newline- or ';'-separated statements, '#' starts a comment)::

        selfadjoint | normal | matrix <N> | zero
        atom <loc> <weight>          (selfadjoint)
        node <loc> <weight>          (selfadjoint)
        atom <re> <im> <weight>      (normal)
        node <re> <im> <weight>      (normal)
        row  <re> <im> ... N pairs   (matrix, N rows)

    ``zero`` is shorthand for a single self-adjoint atom at 0.
    """
    lines = []
    for raw in text.replace(";", "\n").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise ModelError("empty model description")
    head = lines[0].split()
    tag = head[0].lower()
    body = lines[1:]
    if tag == "zero":
        if len(head) > 1 or body:
            raise ModelError("'zero' takes no further data")
        return zero_model()
    if tag in ("selfadjoint", "normal"):
        if len(head) > 1:
            raise ModelError(f"unexpected tokens after {tag!r}")
        want = 2 if tag == "selfadjoint" else 3
        atoms, nodes = [], []
        for line in body:
            f = line.split()
            if f[0] not in ("atom", "node") or len(f) != 1 + want:
                raise ModelError(f"bad {tag} row: {line!r}")
            try:
                vals = [float(v) for v in f[1:]]
            except ValueError as exc:
                raise ModelError(f"bad number in row {line!r}") from exc
            if tag == "selfadjoint":
                loc, w = vals
            else:
                loc, w = complex(vals[0], vals[1]), vals[2]
            (atoms if f[0] == "atom" else nodes).append((loc, w))
        return MeasureModel(atoms, nodes, kind=tag)
    if tag == "matrix":
        if len(head) != 2:
            raise ModelError("matrix header must be 'matrix <N>'")
        try:
            n = int(head[1])
        except ValueError as exc:
            raise ModelError(f"bad matrix size {head[1]!r}") from exc
        if n < 1:
            raise ModelError("matrix size must be >= 1")
        if len(body) != n:
            raise ModelError(f"matrix {n} needs {n} 'row' lines, got {len(body)}")
        x = np.empty((n, n), np.complex128)
        for j, line in enumerate(body):
            f = line.split()
            if f[0] != "row" or len(f) != 1 + 2 * n:
                raise ModelError(f"bad matrix row: {line!r}")
            try:
                vals = np.asarray([float(v) for v in f[1:]], np.float64)
            except ValueError as exc:
                raise ModelError(f"bad number in row {line!r}") from exc
            x[j] = vals[0::2] + 1j * vals[1::2]
        return DenseMatrixModel(x)
    raise ModelError(f"unknown model tag {tag!r}")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())


def resolve_model(spec):
    """Model from an inline description or a file path.

    Strings starting with a variant tag (or 'zero') parse inline;
    anything else is read as a file path.
    """
    first = spec.replace(";", "\n").strip().split(None, 1)
    if first and first[0].split()[0].lower() in ("zero", "selfadjoint", "normal", "matrix"):
        return parse_model(spec)
    return load_model(spec)

"""Truncated bosonic Fock space over M discrete modes.

The space is spanned by occupation tuples (n_1, ..., n_M) with
sum n_i <= n_max, ordered by grade (total quanta) and then lexicographically
descending within a grade, so index 0 is the vacuum and the ordering is
bit-stable across runs.

Truncation convention: every operator is P * Op * P with P the projector
onto the truncated space.  Annihilators map grade n to n - 1 and are exact;
creators therefore kill the top grade, and canonical commutation relations
hold exactly on states supported below the top grade.  The weight a state
carries on the top grade (w_top) is the sole source of identity error and is
reported alongside every check.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .modes import ModeSet

__all__ = [
    "FockBasis",
    "StateVector",
    "LinOp",
    "BasisSizeError",
    "enumerate_basis",
    "annihilator",
    "creator",
    "smeared_annihilator",
    "dgamma",
    "number_operator",
    "field_operator",
    "tensor",
    "matter_embed",
    "fock_embed",
    "write_matrix_market",
]

DEFAULT_MAX_STATES = 200_000
MAX_DIM_ENV = "GSB_MAX_DIM"


class BasisSizeError(ValueError):
    """Raised when a requested basis would exceed the configured size guard."""


def _compositions(total: int, m: int):
    """Yield compositions of `total` into m parts, first part largest first."""
    if m == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for rest in _compositions(total - head, m - 1):
            yield (head,) + rest


class FockBasis:
    """Graded occupation-number basis with a tuple <-> index bijection."""

    def __init__(self, n_modes: int, n_max: int, states):
        self.n_modes = n_modes
        self.n_max = n_max
        self.states = tuple(states)
        self.index = {t: k for k, t in enumerate(self.states)}
        self.occupations = np.array(self.states, dtype=np.int64).reshape(len(self.states), n_modes)
        self.totals = self.occupations.sum(axis=1)
        self.top_mask = self.totals == n_max
        self.interior_mask = self.totals <= n_max - 1

    def __len__(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return len(self.states)

    def vacuum_index(self) -> int:
        return self.index[(0,) * self.n_modes]

    def __repr__(self) -> str:
        return f"FockBasis(n_modes={self.n_modes}, n_max={self.n_max}, dim={len(self)})"


def max_states_guard(explicit: int | None = None) -> int:
    """Resolve the basis size guard: explicit arg, then GSB_MAX_DIM, then default."""
    if explicit is not None:
        return explicit
    env = os.environ.get(MAX_DIM_ENV)
    if env is not None:
        return int(env)
    return DEFAULT_MAX_STATES


def enumerate_basis(n_modes: int, n_max: int, max_states: int | None = None) -> FockBasis:
    """Enumerate occupation tuples with total quanta <= n_max over n_modes modes.

    The count is C(n_modes + n_max, n_modes); a guard (default 200000,
    overridable via the GSB_MAX_DIM environment variable or the max_states
    argument) rejects requests that would not fit in memory.
    """
    if n_modes < 1:
        raise ValueError(f"n_modes must be >= 1, got {n_modes}")
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    count = math.comb(n_modes + n_max, n_modes)
    guard = max_states_guard(max_states)
    if count > guard:
        raise BasisSizeError(
            f"basis with {count} states exceeds the guard of {guard}; "
            f"set {MAX_DIM_ENV} or pass max_states to raise it"
        )
    states = []
    for grade in range(n_max + 1):
        states.extend(_compositions(grade, n_modes))
    basis = FockBasis(n_modes, n_max, states)
    assert len(basis) == count
    return basis


# ---------------------------------------------------------------------------
# Linear operators


class LinOp:
    """Linear operator on a fixed-dimension complex space.

    Concrete storage is either a scipy sparse matrix (`mat`), a diagonal
    (`diag`), or a pair of closures.  Operators compose with @, add, subtract
    and scale; sparse storage is propagated through arithmetic whenever both
    operands carry it, closures are used otherwise.
    """

    def __init__(self, dim, *, mat=None, diag=None, matvec=None, rmatvec=None,
                 hermitian=False):
        self.dim = int(dim)
        self.hermitian = bool(hermitian)
        self._diag = None if diag is None else np.asarray(diag)
        if mat is not None:
            mat = sp.csr_matrix(mat)
            if mat.shape != (self.dim, self.dim):
                raise ValueError(f"matrix shape {mat.shape} does not match dim {self.dim}")
        self.mat = mat
        self._matvec = matvec
        self._rmatvec = rmatvec
        self._adj_mat = None

    # -- construction -------------------------------------------------------

    @staticmethod
    def from_sparse(mat, hermitian: bool = False) -> "LinOp":
        mat = sp.csr_matrix(mat)
        return LinOp(mat.shape[0], mat=mat, hermitian=hermitian)

    @staticmethod
    def from_diagonal(diag) -> "LinOp":
        diag = np.asarray(diag)
        herm = bool(np.all(np.isreal(diag)))
        return LinOp(len(diag), diag=diag, hermitian=herm)

    @staticmethod
    def identity(dim: int) -> "LinOp":
        return LinOp.from_diagonal(np.ones(dim))

    # -- application --------------------------------------------------------

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if self._diag is not None:
            return self._diag * v
        if self.mat is not None:
            return self.mat @ v
        return self._matvec(v)

    def adjoint_apply(self, v: np.ndarray) -> np.ndarray:
        if self.hermitian or self._diag is not None and np.all(np.isreal(self._diag)):
            return self.apply(v)
        if self._diag is not None:
            return np.conj(self._diag) * v
        if self.mat is not None:
            if self._adj_mat is None:
                self._adj_mat = self.mat.conj().T.tocsr()
            return self._adj_mat @ v
        if self._rmatvec is None:
            raise NotImplementedError("no adjoint available for this operator")
        return self._rmatvec(v)

    def adjoint(self) -> "LinOp":
        if self.hermitian:
            return self
        if self._diag is not None:
            return LinOp.from_diagonal(np.conj(self._diag))
        if self.mat is not None:
            return LinOp.from_sparse(self.mat.conj().T)
        return LinOp(self.dim, matvec=self.adjoint_apply, rmatvec=self.apply)

    def diagonal(self) -> np.ndarray | None:
        """Main diagonal when cheaply available (sparse or diagonal storage)."""
        if self._diag is not None:
            return np.asarray(self._diag)
        if self.mat is not None:
            return self.mat.diagonal()
        return None

    def to_sparse(self) -> sp.csr_matrix:
        if self.mat is not None:
            return self.mat
        if self._diag is not None:
            return sp.diags(self._diag).tocsr()
        raise NotImplementedError("operator has no materialized storage")

    # -- arithmetic ---------------------------------------------------------

    def _binary(self, other, op):
        if not isinstance(other, LinOp) or other.dim != self.dim:
            return NotImplemented
        try:
            a, b = self.to_sparse(), other.to_sparse()
        except NotImplementedError:
            sa, oa = self.apply, other.apply
            sr, orr = self.adjoint_apply, other.adjoint_apply
            if op == "add":
                return LinOp(self.dim, matvec=lambda v: sa(v) + oa(v),
                             rmatvec=lambda v: sr(v) + orr(v),
                             hermitian=self.hermitian and other.hermitian)
            return LinOp(self.dim, matvec=lambda v: sa(v) - oa(v),
                         rmatvec=lambda v: sr(v) - orr(v),
                         hermitian=self.hermitian and other.hermitian)
        m = a + b if op == "add" else a - b
        return LinOp.from_sparse(m, hermitian=self.hermitian and other.hermitian)

    def __add__(self, other):
        return self._binary(other, "add")

    def __sub__(self, other):
        return self._binary(other, "sub")

    def __rmul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        herm = self.hermitian and not np.iscomplexobj(np.asarray(scalar))
        if self._diag is not None:
            return LinOp.from_diagonal(scalar * self._diag)
        if self.mat is not None:
            return LinOp.from_sparse(scalar * self.mat, hermitian=herm)
        return LinOp(self.dim, matvec=lambda v: scalar * self.apply(v),
                     rmatvec=lambda v: np.conj(scalar) * self.adjoint_apply(v),
                     hermitian=herm)

    def __matmul__(self, other):
        if not isinstance(other, LinOp) or other.dim != self.dim:
            return NotImplemented
        try:
            m = self.to_sparse() @ other.to_sparse()
            return LinOp.from_sparse(m)
        except NotImplementedError:
            return LinOp(
                self.dim,
                matvec=lambda v: self.apply(other.apply(v)),
                rmatvec=lambda v: other.adjoint_apply(self.adjoint_apply(v)),
            )


class KronSumOp(LinOp):
    """Sum of Kronecker terms sum_k A_k (x) X_k on a matter (x) Fock space.

    A_k is a dense d x d matrix or None for the identity; X_k is a LinOp on
    the Fock factor or None for the identity.  Vectors use the matter-major
    layout: entry (m, t) lives at m * fock_dim + t.  Terms are applied
    without materializing the Kronecker product; `to_sparse` materializes on
    demand (guarded by the caller).
    """

    def __init__(self, d_matter: int, fock_dim: int, terms, hermitian: bool = False):
        super().__init__(d_matter * fock_dim, hermitian=hermitian)
        self.d_matter = d_matter
        self.fock_dim = fock_dim
        self.terms = [(None if A is None else np.asarray(A), X) for A, X in terms]

    def apply(self, v: np.ndarray) -> np.ndarray:
        if self.mat is not None:
            return self.mat @ np.asarray(v)
        V = np.asarray(v).reshape(self.d_matter, self.fock_dim)
        out = np.zeros_like(V, dtype=np.result_type(V.dtype, np.complex128))
        for A, X in self.terms:
            if X is None:
                W = V
            elif X._diag is not None:
                W = V * X._diag[None, :]
            else:
                W = (X.mat @ V.T).T if X.mat is not None else np.stack([X.apply(row) for row in V])
            out += W if A is None else A @ W
        return out.reshape(-1)

    def adjoint_apply(self, v: np.ndarray) -> np.ndarray:
        if self.hermitian:
            return self.apply(v)
        return self.adjoint().apply(v)

    def adjoint(self) -> "LinOp":
        if self.hermitian:
            return self
        terms = [
            (None if A is None else A.conj().T, None if X is None else X.adjoint())
            for A, X in self.terms
        ]
        return KronSumOp(self.d_matter, self.fock_dim, terms)

    def to_sparse_cached(self) -> sp.csr_matrix:
        """Materialize and keep the sparse form so apply() routes through it."""
        if self.mat is None:
            self.mat = self.to_sparse()
        return self.mat

    def diagonal(self) -> np.ndarray:
        out = np.zeros(self.dim, dtype=complex)
        for A, X in self.terms:
            da = np.ones(self.d_matter) if A is None else np.diag(A)
            if X is None:
                dx = np.ones(self.fock_dim)
            else:
                dx = X.diagonal()
                if dx is None:
                    raise NotImplementedError("fock factor has no cheap diagonal")
            out += np.kron(da, dx)
        return out

    def to_sparse(self) -> sp.csr_matrix:
        if self.mat is not None:
            return self.mat
        total = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        eye_d = sp.identity(self.d_matter, format="csr")
        eye_f = sp.identity(self.fock_dim, format="csr")
        for A, X in self.terms:
            am = eye_d if A is None else sp.csr_matrix(A)
            xm = eye_f if X is None else X.to_sparse()
            total = total + sp.kron(am, xm, format="csr")
        return total.tocsr()


# ---------------------------------------------------------------------------
# State vectors


class StateVector:
    """Amplitudes over a matter (x) Fock composite, matter index major."""

    __slots__ = ("amplitudes", "d_matter", "basis")

    def __init__(self, amplitudes, d_matter: int, basis: FockBasis | None):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if basis is not None and len(amplitudes) != d_matter * len(basis):
            raise ValueError(
                f"amplitude length {len(amplitudes)} does not match "
                f"d_matter {d_matter} x basis {len(basis)}"
            )
        if not np.all(np.isfinite(amplitudes)):
            raise ValueError("amplitudes must be finite")
        self.amplitudes = amplitudes
        self.d_matter = d_matter
        self.basis = basis

    @property
    def array(self) -> np.ndarray:
        return self.amplitudes

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def w_top(self) -> float:
        """Probability weight on the maximal-quanta grade (truncation indicator)."""
        if self.basis is None:
            return float("nan")
        V = self.amplitudes.reshape(self.d_matter, len(self.basis))
        return float(np.sum(np.abs(V[:, self.basis.top_mask]) ** 2))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n, self.d_matter, self.basis)


# ---------------------------------------------------------------------------
# Second-quantized operators on the Fock factor


def annihilator(i: int, basis: FockBasis) -> LinOp:
    """Mode annihilator a_i: |..., n_i, ...> -> sqrt(n_i) |..., n_i - 1, ...>."""
    if not 0 <= i < basis.n_modes:
        raise ValueError(f"mode index {i} out of range for {basis.n_modes} modes")
    rows, cols, vals = [], [], []
    for t, occ in enumerate(basis.states):
        n_i = occ[i]
        if n_i == 0:
            continue
        lower = occ[:i] + (n_i - 1,) + occ[i + 1:]
        rows.append(basis.index[lower])
        cols.append(t)
        vals.append(math.sqrt(n_i))
    mat = sp.csr_matrix(
        (vals, (rows, cols)), shape=(len(basis), len(basis)), dtype=float
    )
    return LinOp.from_sparse(mat)


def creator(i: int, basis: FockBasis) -> LinOp:
    """Truncated creator P a_i* P, the adjoint of the annihilator."""
    return annihilator(i, basis).adjoint()


def smeared_annihilator(f, grid: ModeSet, basis: FockBasis) -> LinOp:
    """a(f) = sum_i conj(f_i) sqrt(w_i) a_i, anti-linear in f.

    f is a complex column of function values on the grid points; the
    sqrt(w_i) factor is the cell-normalization convention of the mode set.
    """
    f = np.asarray(f, dtype=complex)
    if len(f) != grid.n_modes or grid.n_modes != basis.n_modes:
        raise ValueError("column length must match grid and basis mode count")
    coeff = np.conj(f) * np.sqrt(grid.weights)
    total = sp.csr_matrix((len(basis), len(basis)), dtype=complex)
    for i in range(grid.n_modes):
        if coeff[i] == 0:
            continue
        total = total + coeff[i] * annihilator(i, basis).mat
    return LinOp.from_sparse(total)


def dgamma(g, basis: FockBasis) -> LinOp:
    """Second quantization of a multiplication operator: diagonal sum_i g_i n_i."""
    g = np.asarray(g, dtype=float)
    if len(g) != basis.n_modes:
        raise ValueError("column length must match basis mode count")
    return LinOp.from_diagonal(basis.occupations @ g)


def number_operator(basis: FockBasis) -> LinOp:
    return dgamma(np.ones(basis.n_modes), basis)


def field_operator(lam, grid: ModeSet, basis: FockBasis) -> LinOp:
    """Smeared field (a*(lam) + a(lam)) / sqrt(2) for a real column lam."""
    lam = np.asarray(lam, dtype=float)
    a = smeared_annihilator(lam, grid, basis)
    mat = (a.mat + a.mat.conj().T) / math.sqrt(2.0)
    return LinOp.from_sparse(mat.real, hermitian=True)


# ---------------------------------------------------------------------------
# Composite-space helpers


def tensor(matter: np.ndarray, fockop: LinOp | None, fock_dim: int | None = None,
           hermitian: bool | None = None) -> KronSumOp:
    """matter (x) fockop on the composite space, matter index major."""
    matter = np.asarray(matter)
    d = matter.shape[0]
    if matter.shape != (d, d):
        raise ValueError("matter operator must be square")
    if fockop is None and fock_dim is None:
        raise ValueError("need fockop or fock_dim")
    nf = fockop.dim if fockop is not None else fock_dim
    if hermitian is None:
        herm_a = bool(np.allclose(matter, matter.conj().T, atol=1e-14))
        hermitian = herm_a and (fockop is None or fockop.hermitian)
    return KronSumOp(d, nf, [(matter, fockop)], hermitian=hermitian)


def matter_embed(matter: np.ndarray, fock_dim: int) -> KronSumOp:
    """A (x) 1."""
    return tensor(matter, None, fock_dim=fock_dim)


def fock_embed(fockop: LinOp, d_matter: int) -> KronSumOp:
    """1 (x) X."""
    return KronSumOp(d_matter, fockop.dim, [(None, fockop)], hermitian=fockop.hermitian)


def write_matrix_market(op: LinOp, path) -> None:
    """Dump an operator in MatrixMarket coordinate format."""
    from scipy.io import mmwrite

    mmwrite(str(path), sp.coo_matrix(op.to_sparse()))

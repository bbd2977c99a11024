"""Dense complex linear algebra and the lattice of closed subspaces.

Conventions used by every module in this package:

* Basis labels are little-endian: the n-bit label x_1...x_n addresses the
  vector entry x = sum_i x_i * 2**(i-1), so qubit 1 is the least
  significant bit.
* A subspace of a d-dimensional space is stored as a d x k matrix with
  orthonormal columns; k = 0 encodes the zero subspace.
* Rank decisions are relative: singular values or eigenvalues below
  TOL_EIG times the largest one count as zero, and an all-zero matrix has
  the zero subspace as its support.

All values are immutable after construction and every function is pure,
so everything here can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidDensityMatrix

TOL_EIG = 1e-8      # relative rank cut for eigen/singular values
TOL_ORTHO = 1e-9    # orthonormality defect allowed in a stored basis
TOL_MEMBER = 1e-7   # relative residual for membership tests
TOL_HERM = 1e-9     # Hermiticity defect allowed in density matrices
TOL_NORM = 1e-9     # normalisation defect (unit vectors, Kraus sums)
TOL_RECON = 1e-10   # Schmidt reconstruction error


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out


def is_hermitian(a: np.ndarray, tol: float = TOL_HERM) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and \
        np.abs(a - a.conj().T).max(initial=0.0) <= tol


def orth_columns(mat: np.ndarray, rtol: float = TOL_EIG) -> np.ndarray:
    """Orthonormal basis of the column space of `mat` (d x k, k = rank)."""
    mat = np.asarray(mat, dtype=complex)
    if mat.size == 0:
        return np.zeros((mat.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return np.zeros((mat.shape[0], 0), dtype=complex)
    rank = int(np.sum(s > rtol * s[0]))
    return u[:, :rank]


@dataclass(frozen=True, eq=False)
class Subspace:
    """A closed subspace, held as an orthonormal column basis.

    Equality of subspaces is mutual containment (`same_space`), never
    equality of the stored bases.
    """

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim != 2:
            raise DimensionMismatch("subspace basis must be a 2-d array")
        d, k = b.shape
        if d < 1 or k > d:
            raise DimensionMismatch(f"invalid basis shape {b.shape}")
        gram = b.conj().T @ b
        if np.abs(gram - np.eye(k)).max(initial=0.0) > TOL_ORTHO:
            raise DimensionMismatch("subspace basis columns are not orthonormal")
        object.__setattr__(self, "basis", _frozen(b))

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(np.zeros((ambient_dim, 0)))

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls(np.eye(ambient_dim))

    @classmethod
    def span(cls, vectors) -> "Subspace":
        """Subspace spanned by the given vectors (columns need not be
        independent or normalised)."""
        cols = np.column_stack([np.asarray(v, dtype=complex).reshape(-1)
                                for v in vectors])
        return cls(orth_columns(cols))

    def contains(self, other, tol: float = TOL_MEMBER) -> bool:
        return contains(self, other, tol)

    def projector(self) -> np.ndarray:
        return projector(self)

    def complement(self) -> "Subspace":
        return orthocomplement(self)

    def same_space(self, other: "Subspace", tol: float = TOL_MEMBER) -> bool:
        return self.dim == other.dim and contains(self, other, tol) \
            and contains(other, self, tol)

    def __repr__(self):
        return f"<Subspace dim {self.dim} of C^{self.ambient_dim}>"


def support(rho: np.ndarray, rtol: float = TOL_EIG) -> Subspace:
    """Span of the eigenvectors of a Hermitian PSD matrix with eigenvalue
    above `rtol` times the largest one.  The zero matrix has zero support."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidDensityMatrix(f"expected a square matrix, got {rho.shape}")
    if not is_hermitian(rho):
        raise InvalidDensityMatrix("matrix is not Hermitian")
    w, v = np.linalg.eigh(rho)
    top = w[-1]
    if top <= 0.0:
        return Subspace.zero(rho.shape[0])
    keep = w > rtol * top
    return Subspace(v[:, keep])


def join(subspaces) -> Subspace:
    """Smallest subspace containing every given one (span of the union)."""
    subspaces = list(subspaces)
    if not subspaces:
        raise DimensionMismatch("join of an empty family is undefined")
    d = subspaces[0].ambient_dim
    for x in subspaces:
        if x.ambient_dim != d:
            raise DimensionMismatch(
                f"ambient dims differ: {x.ambient_dim} vs {d}")
    stacked = np.hstack([x.basis for x in subspaces])
    return Subspace(orth_columns(stacked))


def orthocomplement(x: Subspace) -> Subspace:
    """All vectors orthogonal to `x`; dim(x) + dim(x^perp) = ambient dim."""
    d, k = x.basis.shape
    if k == 0:
        return Subspace.full(d)
    # null space of basis^dagger: right singular vectors past the rank
    _, s, vh = np.linalg.svd(x.basis.conj().T, full_matrices=True)
    rank = int(np.sum(s > TOL_EIG * s[0])) if s.size else 0
    return Subspace(vh[rank:].conj().T)


def intersect(x: Subspace, y: Subspace) -> Subspace:
    """Lattice meet, computed as the complement of the join of complements."""
    if x.ambient_dim != y.ambient_dim:
        raise DimensionMismatch(
            f"ambient dims differ: {x.ambient_dim} vs {y.ambient_dim}")
    return orthocomplement(join([orthocomplement(x), orthocomplement(y)]))


def contains(x: Subspace, v, tol: float = TOL_MEMBER) -> bool:
    """Membership test: the residual (I - P_x) v is at most `tol`*|v| for a
    vector, and columnwise for a subspace argument."""
    if isinstance(v, Subspace):
        if v.ambient_dim != x.ambient_dim:
            raise DimensionMismatch(
                f"ambient dims differ: {v.ambient_dim} vs {x.ambient_dim}")
        cols = v.basis
    else:
        cols = np.asarray(v, dtype=complex).reshape(-1, 1)
        if cols.shape[0] != x.ambient_dim:
            raise DimensionMismatch(
                f"vector dim {cols.shape[0]} vs ambient {x.ambient_dim}")
    if cols.shape[1] == 0:
        return True
    resid = cols - x.basis @ (x.basis.conj().T @ cols)
    norms = np.linalg.norm(cols, axis=0)
    resid_norms = np.linalg.norm(resid, axis=0)
    scale = np.where(norms > 0.0, norms, 1.0)
    return bool(np.all(resid_norms <= tol * scale))


def projector(x: Subspace) -> np.ndarray:
    """Hermitian idempotent P = B B^dagger projecting onto `x`."""
    return x.basis @ x.basis.conj().T


def schmidt(phi: np.ndarray, d: int, rtol: float = TOL_EIG):
    """Schmidt decomposition of a vector on a d*d-dimensional bipartite space.

    Returns [(coefficient, left, right), ...] with positive coefficients in
    decreasing order, keeping terms above `rtol` times the largest; the sum
    of coefficient * kron(left, right) reconstructs `phi`.
    """
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    if phi.shape[0] != d * d:
        raise DimensionMismatch(
            f"vector dim {phi.shape[0]} is not {d}*{d}")
    a = phi.reshape(d, d)  # kron(left, right): left index is most significant
    u, s, vh = np.linalg.svd(a)
    if s.size == 0 or s[0] <= 0.0:
        return []
    keep = s > rtol * s[0]
    # a = u diag(s) vh, so phi = sum_j s_j u[:,j] (x) vh[j,:]
    return [(float(s[j]), u[:, j].copy(), vh[j].copy())
            for j in np.nonzero(keep)[0]]

"""Dense linear-algebra and quantum-information primitives.

Everything here works on chains of three-level sites (local dimension 3).
Conventions, fixed once for the whole package:

* site 0 is the leftmost tensor factor, i.e. the slowest-varying index;
* the local basis is ordered m = +1, 0, -1;
* all entropies are in bits (base-2 logarithms).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import PositivityError, SupportError

LOCAL_DIM = 3

# Eigenvalues below EIG_CLAMP are treated as exact zeros in entropy sums;
# eigenvalues below NEGATIVE_EIG_TOL are a genuine positivity violation.
EIG_CLAMP = 1e-12
NEGATIVE_EIG_TOL = -1e-10

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
NORM_TOL = 1e-12

# Positivity is only verified eagerly up to this dimension; beyond it a
# full eigendecomposition at construction time would dominate the cost
# of whatever produced the matrix.
_EAGER_POSITIVITY_DIM = 729


@dataclass(frozen=True)
class DensityMatrix:
    """Density matrix of ``site_count`` three-level sites.

    ``data`` is a (3^k, 3^k) Hermitian, unit-trace, positive-semidefinite
    matrix. Real float arrays are accepted (states of the real-symmetric
    Hamiltonians used here stay real); they are treated as complex
    matrices with vanishing imaginary part.
    """

    data: np.ndarray
    site_count: int

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {data.shape}")
        dim = LOCAL_DIM ** self.site_count
        if data.shape[0] != dim:
            raise ValueError(
                f"matrix side {data.shape[0]} does not match {self.site_count} sites (expected {dim})"
            )
        if np.abs(data - data.conj().T).max() > HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian within 1e-10")
        tr = np.trace(data)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} differs from 1 beyond 1e-10")
        if dim <= _EAGER_POSITIVITY_DIM:
            lo = float(np.linalg.eigvalsh(data)[0])
            if lo < NEGATIVE_EIG_TOL:
                raise PositivityError(f"density matrix has eigenvalue {lo} < -1e-10")
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def as_tensor(self) -> np.ndarray:
        """View with one ket and one bra axis per site."""
        k = self.site_count
        return self.data.reshape((LOCAL_DIM,) * (2 * k))


@dataclass(frozen=True)
class StateVector:
    """Pure state of an ``sites``-site chain, unit Euclidean norm."""

    amplitudes: np.ndarray
    sites: int

    def __post_init__(self):
        amp = np.asarray(self.amplitudes)
        if amp.ndim != 1 or amp.shape[0] != LOCAL_DIM**self.sites:
            raise ValueError(
                f"amplitude vector of length {amp.shape} does not match {self.sites} sites"
            )
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state vector norm {norm} differs from 1 beyond 1e-12")
        object.__setattr__(self, "amplitudes", amp)

    def as_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((LOCAL_DIM,) * self.sites)

    def density_matrix(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.sites)


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a`` acting on the leading subsystem."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"first factor is not square: shape {a.shape}")
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError(f"second factor is not square: shape {b.shape}")
    return np.kron(a, b)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced density matrix on the kept sites, in ascending site order."""
    keep = sorted(set(keep))
    k = rho.site_count
    if not keep:
        raise ValueError("keep set must be nonempty")
    if keep[0] < 0 or keep[-1] >= k:
        raise ValueError(f"site indices {keep} out of range for {k} sites")
    traced = [s for s in range(k) if s not in keep]
    tensor = rho.as_tensor()
    n = k
    for s in sorted(traced, reverse=True):
        tensor = np.trace(tensor, axis1=s, axis2=s + n)
        n -= 1
    d = LOCAL_DIM ** len(keep)
    return DensityMatrix(tensor.reshape(d, d), len(keep))


def _checked_eigvals(mat: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, with the clamp rule applied.

    Values in [-1e-10, 1e-12) are set to zero; lower values raise.
    """
    mat = np.asarray(mat)
    if np.abs(mat - mat.conj().T).max() > HERMITICITY_TOL:
        raise ValueError("matrix is not Hermitian within 1e-10")
    vals = np.linalg.eigvalsh(mat)
    if vals[0] < NEGATIVE_EIG_TOL:
        raise PositivityError(f"eigenvalue {vals[0]} < -1e-10")
    return np.where(vals < EIG_CLAMP, 0.0, vals)


def shannon_entropy(probabilities: np.ndarray) -> float:
    """Base-2 Shannon entropy with the 0 log 0 := 0 convention."""
    p = np.asarray(probabilities, dtype=float)
    if p.size and p.min() < NEGATIVE_EIG_TOL:
        raise PositivityError(f"probability {p.min()} < -1e-10")
    p = p[p >= EIG_CLAMP]
    return float(-np.sum(p * np.log2(p)))


def von_neumann_entropy(rho) -> float:
    """S(rho) = -Tr[rho log2 rho] in bits."""
    mat = rho.data if isinstance(rho, DensityMatrix) else rho
    vals = _checked_eigvals(mat)
    return shannon_entropy(vals)


def relative_entropy(rho, sigma, support_tol: float = 1e-10) -> float:
    """S(rho || sigma) = Tr[rho log2 rho] - Tr[rho log2 sigma] in bits.

    Raises SupportError when ``rho`` has weight outside the support of
    ``sigma`` (the relative entropy is then infinite).
    """
    rmat = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    smat = sigma.data if isinstance(sigma, DensityMatrix) else np.asarray(sigma)
    if rmat.shape != smat.shape:
        raise ValueError(f"shape mismatch: {rmat.shape} vs {smat.shape}")

    pvals = _checked_eigvals(rmat)
    if np.abs(smat - smat.conj().T).max() > HERMITICITY_TOL:
        raise ValueError("sigma is not Hermitian within 1e-10")
    qvals, qvecs = np.linalg.eigh(smat)
    if qvals[0] < NEGATIVE_EIG_TOL:
        raise PositivityError(f"sigma eigenvalue {qvals[0]} < -1e-10")

    # weight of rho on each sigma eigenvector
    weights = np.real(np.einsum("ij,jk,ki->i", qvecs.conj().T, rmat, qvecs))
    null = qvals < EIG_CLAMP
    if np.any(weights[null] > support_tol):
        raise SupportError(
            "support(rho) is not contained in support(sigma): relative entropy is infinite"
        )

    plogp = float(np.sum(pvals[pvals >= EIG_CLAMP] * np.log2(pvals[pvals >= EIG_CLAMP])))
    live = ~null
    cross = float(np.sum(weights[live] * np.log2(qvals[live])))
    return plogp - cross

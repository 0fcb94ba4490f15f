"""Spin-1 Heisenberg chain with uniaxial anisotropy.

H = sum_i (Sx_i Sx_{i+1} + Sy_i Sy_{i+1} + Sz_i Sz_{i+1}) + U sum_i (Sz_i)^2

built in the product Sz eigenbasis ordered m = +1, 0, -1 per site; in that
basis H is real symmetric (the SySy term is real because both factors are
purely imaginary). Ground states are found with a sparse Lanczos solver
block-diagonalized over total-Sz sectors; thermal states use a full dense
eigendecomposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, ResourceLimitError
from .qalgebra import LOCAL_DIM, DensityMatrix, StateVector, partial_trace

LANCZOS_SITE_CAP = 16   # sparse ground-state ceiling
DENSE_SITE_CAP = 8      # full-eigendecomposition (thermal) ceiling
DEGENERACY_GAP = 1e-9
RESIDUAL_REL_TOL = 1e-9

_SQ2 = np.sqrt(2.0)

_SX = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float) / _SQ2
_SY = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / _SQ2
_SZ = np.diag([1.0, 0.0, -1.0])


@dataclass(frozen=True)
class SpinOperators:
    """The spin-1 operator triple in the m = +1, 0, -1 basis (hbar = 1)."""

    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray


def spin_operators() -> SpinOperators:
    return SpinOperators(_SX.copy(), _SY.copy(), _SZ.copy())


def _bond_matrix() -> np.ndarray:
    """9x9 real matrix of Sx.Sx + Sy.Sy + Sz.Sz on one bond."""
    m = np.kron(_SX, _SX) + np.kron(_SY, _SY).real + np.kron(_SZ, _SZ)
    return np.ascontiguousarray(m.real)


_BOND = _bond_matrix()


@dataclass(eq=False)
class SparseHamiltonian:
    """Chain Hamiltonian; matrix representations are built lazily."""

    L: int
    U: float
    boundary: str
    _dense_eig: tuple | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return LOCAL_DIM**self.L

    @property
    def bonds(self) -> list[tuple[int, int]]:
        pairs = [(i, i + 1) for i in range(self.L - 1)]
        if self.boundary == "periodic":
            pairs.append((self.L - 1, 0))
        return pairs

    @property
    def nonzeros(self) -> sp.csr_matrix:
        """Explicit sparse matrix; only sensible up to L ~ 12."""
        if self.L > 12:
            raise ResourceLimitError(
                f"explicit sparse matrix at L={self.L} would not fit in memory; use matvec()"
            )
        return _full_csr(self.L, self.U, self.boundary)

    def dense(self) -> np.ndarray:
        if self.L > DENSE_SITE_CAP:
            raise ResourceLimitError(f"dense path capped at L={DENSE_SITE_CAP}, got L={self.L}")
        return self.nonzeros.toarray()

    def dense_eig(self) -> tuple[np.ndarray, np.ndarray]:
        """Full (eigenvalues, eigenvectors), cached for thermal reuse."""
        if self._dense_eig is None:
            w, v = np.linalg.eigh(self.dense())
            self._dense_eig = (w, v)
        return self._dense_eig

    def norm_bound(self) -> float:
        """Upper bound on the spectral norm: 2 per bond plus |U| per site."""
        return 2.0 * len(self.bonds) + abs(self.U) * self.L

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Matrix-free H @ v via per-bond tensor contractions."""
        L = self.L
        shape = (LOCAL_DIM,) * L
        vr = v.reshape(shape)
        out = (self.U * _sz2_diagonal(L)) * v if self.U else np.zeros_like(v)
        out = out.reshape(shape)
        bond4 = _BOND.reshape(3, 3, 3, 3)
        for (i, j) in self.bonds:
            contrib = np.tensordot(vr, bond4, axes=([i, j], [2, 3]))
            # tensordot appends the two output legs; move them back to i, j
            rest = [s for s in range(L) if s not in (i, j)]
            perm = np.argsort(rest + [i, j])
            out += contrib.transpose(perm)
        return out.reshape(v.shape)


@lru_cache(maxsize=8)
def _sz2_diagonal(L: int) -> np.ndarray:
    """Diagonal of sum_i (Sz_i)^2 in the product basis."""
    m = 1 - _digits(np.arange(LOCAL_DIM**L, dtype=np.int64), L)
    return np.sum(m.astype(np.float64) ** 2, axis=1)


def _digits(codes: np.ndarray, L: int) -> np.ndarray:
    """Base-3 digits of each code, site 0 most significant; shape (n, L)."""
    out = np.empty((codes.size, L), dtype=np.int8)
    c = codes.copy()
    for s in range(L - 1, -1, -1):
        out[:, s] = c % 3
        c //= 3
    return out


def build_hamiltonian(L: int, U: float, boundary: str = "open") -> SparseHamiltonian:
    """Assemble the chain Hamiltonian for ``L`` sites and anisotropy ``U``."""
    if boundary not in ("open", "periodic"):
        raise ValueError(f"boundary must be 'open' or 'periodic', got {boundary!r}")
    if L < 2:
        raise ValueError(f"need at least 2 sites, got L={L}")
    if boundary == "periodic" and L == 2:
        raise ValueError(
            "periodic L=2 would count the single bond twice; use the open two-site chain"
        )
    return SparseHamiltonian(L, float(U), boundary)


@lru_cache(maxsize=32)
def _full_csr(L: int, U: float, boundary: str) -> sp.csr_matrix:
    """Kronecker-product assembly of the full sparse matrix."""
    dim = LOCAL_DIM**L
    h = sp.csr_matrix((dim, dim), dtype=float)
    bond = sp.csr_matrix(_BOND)
    for i in range(L - 1):
        left = sp.identity(LOCAL_DIM**i, format="csr")
        right = sp.identity(LOCAL_DIM ** (L - i - 2), format="csr")
        h = h + sp.kron(sp.kron(left, bond), right, format="csr")
    if boundary == "periodic" and L > 2:
        # wrap bond couples site 0 (leading factor) and site L-1 (trailing)
        mid = sp.identity(LOCAL_DIM ** (L - 2), format="csr")
        for op in (_SX, _SY, _SZ):
            term = sp.kron(sp.kron(sp.csr_matrix(op), mid), sp.csr_matrix(op), format="csr")
            h = h + term.real
    if U:
        h = h + sp.diags(U * _sz2_diagonal(L))
    h = sp.csr_matrix(h.real)
    h.sum_duplicates()
    return h


# ---------------------------------------------------------------------------
# total-Sz sector machinery
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _sector_codes(L: int, m_total: int) -> np.ndarray:
    """Sorted basis-state codes with total magnetization ``m_total``."""
    codes = np.arange(LOCAL_DIM**L, dtype=np.int64)
    m = (1 - _digits(codes, L)).sum(axis=1)
    return codes[m == m_total]


@lru_cache(maxsize=8)
def _sector_structure(L: int, boundary: str, m_total: int):
    """U-independent pieces of one sector block.

    Returns (codes, offdiag_csr, bond_diag, sz2_diag); the full block for
    anisotropy U is offdiag + diag(bond_diag + U * sz2_diag).
    """
    codes = _sector_codes(L, m_total)
    n = codes.size
    digs = _digits(codes, L)
    m = (1 - digs).astype(np.int64)

    bonds = [(i, i + 1) for i in range(L - 1)]
    if boundary == "periodic":
        bonds.append((L - 1, 0))

    bond_diag = np.zeros(n)
    for (i, j) in bonds:
        bond_diag += m[:, i] * m[:, j]
    sz2_diag = np.sum(m.astype(np.float64) ** 2, axis=1)

    rows, cols = [], []
    pow3 = 3 ** np.arange(L - 1, -1, -1, dtype=np.int64)
    for (i, j) in bonds:
        for (a, b) in ((i, j), (j, i)):
            # raise m_a by one, lower m_b by one; every allowed hop has amplitude 1
            mask = (m[:, a] < 1) & (m[:, b] > -1)
            if not mask.any():
                continue
            src = codes[mask]
            dst = src - pow3[a] + pow3[b]
            rows.append(np.searchsorted(codes, dst))
            cols.append(np.flatnonzero(mask))
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        data = np.ones(r.size)
        offdiag = sp.coo_matrix((data, (r, c)), shape=(n, n)).tocsr()
    else:
        offdiag = sp.csr_matrix((n, n))
    return codes, offdiag, bond_diag, sz2_diag


def _sector_matrix(h: SparseHamiltonian, m_total: int) -> tuple[np.ndarray, sp.csr_matrix]:
    codes, offdiag, bond_diag, sz2_diag = _sector_structure(h.L, h.boundary, m_total)
    block = offdiag + sp.diags(bond_diag + h.U * sz2_diag)
    return codes, block


def _sector_lowest(h: SparseHamiltonian, m_total: int, k: int, seed: int):
    """Lowest ``k`` eigenpairs within one magnetization sector."""
    codes, block = _sector_matrix(h, m_total)
    n = block.shape[0]
    if n == 0:
        return codes, np.empty(0), np.empty((0, 0))
    k_eff = min(k, n)
    if n <= 400 or k_eff > n - 2:
        w, v = np.linalg.eigh(block.toarray())
        return codes, w[:k_eff], v[:, :k_eff]
    rng = np.random.default_rng((seed, h.L, m_total))
    v0 = rng.standard_normal(n)
    try:
        w, v = spla.eigsh(block, k=k_eff, which="SA", v0=v0, ncv=min(n - 1, 40), tol=1e-12)
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError(
            f"Lanczos failed to converge in sector m={m_total} at L={h.L}, U={h.U}",
            residual=getattr(exc, "eigenvalues", None),
        ) from exc
    order = np.argsort(w)
    return codes, w[order], v[:, order]


def _scan_sectors(L: int) -> list[int]:
    """Magnetization sectors scanned for the ground state.

    Up to L = 10 every sector is checked (with the m <-> -m mirror
    implied); for larger chains only m = 0, 1 are solved and an anomaly
    in their ordering triggers a full rescan.
    """
    if L <= 10:
        return list(range(L + 1))
    return [0, 1]


def ground_state(h: SparseHamiltonian, seed: int = 0) -> tuple[float, StateVector, bool]:
    """Lowest eigenpair of ``h``: (energy, state, degenerate flag).

    The state is returned in the full product basis with its largest
    amplitude made positive (real vectors, real-symmetric H). The
    ``degenerate`` flag is set when the gap to the next level is below
    1e-9, which happens at the odd-L level crossings.
    """
    if h.L > LANCZOS_SITE_CAP:
        raise ResourceLimitError(f"ground_state capped at L={LANCZOS_SITE_CAP}, got L={h.L}")

    candidates = []  # (energy, m_total, codes, vector-in-sector)
    spare = []       # higher levels for the gap estimate
    sectors = _scan_sectors(h.L)
    for m_total in sectors:
        codes, w, v = _sector_lowest(h, m_total, k=2, seed=seed)
        if w.size == 0:
            continue
        candidates.append((w[0], m_total, codes, v[:, 0]))
        for extra in w[1:]:
            spare.append((extra, m_total))

    if h.L > 10:
        by_sector = {m: e for e, m, _, _ in candidates}
        if by_sector.get(1, np.inf) < by_sector.get(0, np.inf):
            # ground state is not where expected; rescan everything
            for m_total in range(2, h.L + 1):
                codes, w, v = _sector_lowest(h, m_total, k=2, seed=seed)
                if w.size:
                    candidates.append((w[0], m_total, codes, v[:, 0]))
                    for extra in w[1:]:
                        spare.append((extra, m_total))

    candidates.sort(key=lambda t: t[0])
    energy, m_best, codes, vec = candidates[0]

    # the m <-> -m mirror makes any m != 0 ground state exactly degenerate
    others = [e for e, m, _, _ in candidates[1:]]
    others += [e for e, _ in spare]
    if m_best != 0:
        gap = 0.0
    else:
        gap = min(others) - energy if others else np.inf
    degenerate = bool(gap < DEGENERACY_GAP)

    full = np.zeros(h.dim)
    full[codes] = vec
    pivot = np.argmax(np.abs(full))
    if full[pivot] < 0:
        full = -full
    full /= np.linalg.norm(full)

    residual = np.linalg.norm(h.matvec(full) - energy * full)
    bound = RESIDUAL_REL_TOL * h.norm_bound()
    if residual > bound:
        raise ConvergenceError(
            f"ground-state residual {residual:.3e} exceeds {bound:.3e}", residual=residual
        )
    return float(energy), StateVector(full, h.L), degenerate


@dataclass(frozen=True)
class SpectrumSlice:
    """The k lowest energy levels with near-degeneracy flags."""

    energies: np.ndarray
    degeneracy_flags: np.ndarray


def low_spectrum(h: SparseHamiltonian, k: int, seed: int = 0) -> SpectrumSlice:
    """``k`` lowest eigenvalues of ``h``, ascending."""
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    dim = h.dim
    if k >= dim:
        raise ValueError(f"k={k} too large for dimension {dim}")
    if h.L > LANCZOS_SITE_CAP:
        raise ResourceLimitError(f"low_spectrum capped at L={LANCZOS_SITE_CAP}")

    want = min(k + 1, dim)
    if dim <= 2000:
        w = np.linalg.eigh(h.nonzeros.toarray())[0][:want]
    else:
        levels = []
        for m_total in range(h.L + 1):
            _, wm, _ = _sector_lowest(h, m_total, k=want, seed=seed)
            levels.extend(wm.tolist())
            if m_total != 0:
                levels.extend(wm.tolist())  # mirror sector -m
        levels.sort()
        w = np.array(levels[:want])

    flags = np.zeros(k, dtype=bool)
    gaps = np.diff(w)  # gap from level i to level i+1
    m = min(k, gaps.size)
    flags[:m] = gaps[:m] < DEGENERACY_GAP
    return SpectrumSlice(np.asarray(w[:k]), flags)


def thermal_state(h: SparseHamiltonian, T: float) -> DensityMatrix:
    """Gibbs state exp(-H/T)/Z (Boltzmann constant 1) by full dense eigendecomposition."""
    if T <= 0:
        raise ValueError(f"temperature must be positive, got T={T}")
    if h.L > DENSE_SITE_CAP:
        raise ResourceLimitError(
            f"thermal_state uses the dense path, capped at L={DENSE_SITE_CAP}; got L={h.L}"
        )
    w, v = h.dense_eig()
    weights = np.exp(-(w - w[0]) / T)
    weights /= weights.sum()
    rho = (v * weights) @ v.T
    rho = 0.5 * (rho + rho.T)  # kill roundoff asymmetry
    return DensityMatrix(rho, h.L)


def reduced_pair_state(state, i: int, j: int) -> DensityMatrix:
    """9x9 reduced state of sites (i, j) of a pure or mixed chain state.

    Pure states are contracted directly, never forming the full outer
    product.
    """
    if isinstance(state, StateVector):
        L = state.sites
        if not (0 <= i < j < L):
            raise ValueError(f"need 0 <= i < j < L={L}, got ({i}, {j})")
        rest = [s for s in range(L) if s not in (i, j)]
        psi = state.as_tensor()
        rho4 = np.tensordot(psi, psi.conj(), axes=(rest, rest))
        return DensityMatrix(rho4.reshape(9, 9), 2)
    if isinstance(state, DensityMatrix):
        L = state.site_count
        if not (0 <= i < j < L):
            raise ValueError(f"need 0 <= i < j < L={L}, got ({i}, {j})")
        return partial_trace(state, {i, j})
    raise TypeError(f"expected StateVector or DensityMatrix, got {type(state)}")

"""Projective measurement bases for spin-1 sites and local dephasing maps.

A general orthonormal single-site basis is produced by acting on the Sz
eigenbasis with (right to left): a quadrupolar "squeezing" pair generated
by beta and alpha, a diagonal phase factor (gamma, phi0), and the three
Euler-style rotations (phi about z, theta about y, psi about x). Setting
gamma = psi = phi = phi0 = 0 leaves a purely real basis, the subset that
suffices for real-symmetric chain states.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .qalgebra import LOCAL_DIM, DensityMatrix, StateVector

_SQ2 = np.sqrt(2.0)
_SX = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float) / _SQ2
_SY = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / _SQ2
_SZ = np.diag([1.0, 0.0, -1.0])

UNITARITY_TOL = 1e-12
TWO_PI = 2.0 * np.pi

# order used for lexicographic tie-breaking and CSV output
ANGLE_FIELDS = ("theta", "alpha", "beta", "gamma", "psi", "phi", "phi0")


@dataclass(frozen=True)
class MeasurementAngles:
    """Parameter set defining one single-site measurement basis."""

    theta: float = 0.0
    phi: float = 0.0
    psi: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    phi0: float = 0.0

    def __post_init__(self):
        for name in ANGLE_FIELDS:
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"angle {name} is not finite")

    def key(self) -> tuple[float, ...]:
        """Tie-breaking tuple (theta, alpha, beta, gamma, psi, phi, phi0)."""
        return tuple(getattr(self, name) for name in ANGLE_FIELDS)

    def canonical(self) -> "MeasurementAngles":
        """Wrap every angle into [0, 2pi), folding theta into [0, pi).

        The fold uses the exact projector-set identity
        basis(theta) = basis(theta - pi) . Ry(pi), valid when the
        squeezing pair (alpha, beta) vanishes; Ry(pi) only permutes the
        initial kets up to phases but negates phi and phi0. With a
        nonzero squeezing pair no such fold exists and theta is
        reported in [0, 2pi).
        """
        def wrap(x: float) -> float:
            x = float(np.mod(x, TWO_PI))
            if TWO_PI - x < 1e-9 or x < 1e-9:
                return 0.0
            return x

        def near_zero(x: float) -> bool:
            return min(x, TWO_PI - x) < 1e-8

        vals = {name: wrap(getattr(self, name)) for name in ANGLE_FIELDS}
        if near_zero(vals["alpha"]) and near_zero(vals["beta"]):
            folds = int((vals["theta"] + 1e-9) // np.pi)
            if folds:
                vals["theta"] = wrap(vals["theta"] - folds * np.pi)
                if folds % 2:
                    vals["phi"] = wrap(-vals["phi"])
                    vals["phi0"] = wrap(-vals["phi0"])
        return MeasurementAngles(**vals)


@dataclass(frozen=True)
class ProjectiveBasis:
    """Orthonormal single-site basis, stored as a 3x3 unitary.

    Column k of ``matrix`` is the transformed basis ket for m = (+1, 0,
    -1)[k].
    """

    matrix: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.matrix)
        if u.shape != (LOCAL_DIM, LOCAL_DIM):
            raise ValueError(f"basis matrix must be 3x3, got {u.shape}")
        gram = u.conj().T @ u
        if np.abs(gram - np.eye(LOCAL_DIM)).max() > UNITARITY_TOL:
            raise ValueError("basis vectors are not orthonormal to 1e-12")
        object.__setattr__(self, "matrix", u)

    @property
    def vectors(self) -> tuple[np.ndarray, ...]:
        return tuple(self.matrix[:, k] for k in range(LOCAL_DIM))


def _eig_cache(generator: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(generator)
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


# fixed Hermitian generators, eigendecomposed once; exp(i c G) is then
# two small matrix products per evaluation
_QUAD_ALPHA = _SX @ _SY + _SY @ _SX
_QUAD_BETA = (_SY + _SY @ _SZ + _SZ @ _SY) / _SQ2
_EIG_SX = _eig_cache(_SX)
_EIG_SY = _eig_cache(_SY)
_EIG_QA = _eig_cache(_QUAD_ALPHA)
_EIG_QB = _eig_cache(_QUAD_BETA)
_MZ = np.array([1.0, 0.0, -1.0])  # Sz eigenvalues in basis order


def _expi_fixed(eig: tuple[np.ndarray, np.ndarray], coeff: float) -> np.ndarray:
    w, v = eig
    return (v * np.exp(1j * coeff * w)) @ v.conj().T


def _basis_matrix_full(
    theta: float, phi: float, psi: float, alpha: float, beta: float, gamma: float, phi0: float
) -> np.ndarray:
    u = np.diag(np.exp(1j * (gamma * (_MZ**2 - 1.0) - phi0 * _MZ)))
    u = u @ _expi_fixed(_EIG_QA, -alpha)
    u = u @ _expi_fixed(_EIG_QB, beta)
    u = np.exp(-1j * phi * _MZ)[:, None] * u  # left-multiply by the diagonal Rz
    u = _expi_fixed(_EIG_SY, -theta) @ u
    u = _expi_fixed(_EIG_SX, -psi) @ u
    return u


def basis_from_angles(angles: MeasurementAngles) -> ProjectiveBasis:
    """Most general spin-1 measurement basis for the given parameters."""
    a = angles
    return ProjectiveBasis(
        _basis_matrix_full(a.theta, a.phi, a.psi, a.alpha, a.beta, a.gamma, a.phi0)
    )


def _real_basis_matrix(theta: float, alpha: float, beta: float) -> np.ndarray:
    """Closed-form real unitary for the gamma = psi = phi = phi0 = 0 family."""
    ct, st = np.cos(theta), np.sin(theta)
    ry = np.array(
        [
            [0.5 * (1 + ct), -st / _SQ2, 0.5 * (1 - ct)],
            [st / _SQ2, ct, -st / _SQ2],
            [0.5 * (1 - ct), st / _SQ2, 0.5 * (1 + ct)],
        ]
    )
    ca, sa = np.cos(alpha), np.sin(alpha)
    ea = np.array([[ca, 0.0, -sa], [0.0, 1.0, 0.0], [sa, 0.0, ca]])
    cb, sb = np.cos(beta), np.sin(beta)
    eb = np.array([[cb, sb, 0.0], [-sb, cb, 0.0], [0.0, 0.0, 1.0]])
    return ry @ ea @ eb


def real_basis_from_angles(theta: float, alpha: float, beta: float) -> ProjectiveBasis:
    """Real-superposition basis: the (theta, alpha, beta) subfamily."""
    return ProjectiveBasis(_real_basis_matrix(theta, alpha, beta))


def _site_unitaries(bases: Sequence[ProjectiveBasis]) -> list[np.ndarray]:
    return [b.matrix for b in bases]


def _rotate_tensor(rho_tensor: np.ndarray, unitaries: Sequence[np.ndarray]) -> np.ndarray:
    """(U1 x ... x Uk)^dag rho (U1 x ... x Uk) on a (3,)*2k tensor."""
    k = len(unitaries)
    out = rho_tensor
    for s, u in enumerate(unitaries):
        out = np.moveaxis(np.tensordot(u.conj().T, out, axes=([1], [s])), 0, s)
    for s, u in enumerate(unitaries):
        out = np.moveaxis(np.tensordot(out, u, axes=([k + s], [0])), -1, k + s)
    return out


def dephase(rho: DensityMatrix, bases: Sequence[ProjectiveBasis]) -> DensityMatrix:
    """Remove all coherences of ``rho`` in the given product basis.

    Implemented by rotating to the measurement product basis, zeroing
    the off-diagonal part, and rotating back; this equals the projector
    sandwich sum and is idempotent and trace preserving.
    """
    k = rho.site_count
    if len(bases) != k:
        raise ValueError(f"got {len(bases)} bases for {k} sites")
    unitaries = _site_unitaries(bases)
    if k <= 6:
        w = reduce(np.kron, unitaries)
        rotated = w.conj().T @ rho.data @ w
        diag = np.real(np.diagonal(rotated))
        out = (w * diag) @ w.conj().T
    else:
        tensor = _rotate_tensor(rho.as_tensor(), unitaries)
        dim = LOCAL_DIM**k
        diag = np.real(np.diagonal(tensor.reshape(dim, dim)))
        # rotate the diagonal matrix back: W diag W^dag
        dtensor = np.zeros((dim, dim), dtype=complex)
        np.fill_diagonal(dtensor, diag)
        out = _rotate_tensor(
            dtensor.reshape((LOCAL_DIM,) * (2 * k)),
            [u.conj().T for u in unitaries],
        ).reshape(dim, dim)
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out, k)


def dephased_probabilities(state, bases: Sequence[ProjectiveBasis]) -> np.ndarray:
    """Outcome distribution of the product measurement on ``state``.

    These are the eigenvalues of the dephased state, so the entropy of a
    dephased state is just the Shannon entropy of this vector. Pure
    states never leave vector form.
    """
    unitaries = _site_unitaries(bases)
    if isinstance(state, StateVector):
        if len(bases) != state.sites:
            raise ValueError(f"got {len(bases)} bases for {state.sites} sites")
        amp = state.as_tensor()
        for s, u in enumerate(unitaries):
            amp = np.moveaxis(np.tensordot(u.conj().T, amp, axes=([1], [s])), 0, s)
        return np.abs(amp.reshape(-1)) ** 2
    if isinstance(state, DensityMatrix):
        k = state.site_count
        if len(bases) != k:
            raise ValueError(f"got {len(bases)} bases for {k} sites")
        tensor = _rotate_tensor(state.as_tensor(), unitaries)
        dim = LOCAL_DIM**k
        return np.real(np.diagonal(tensor.reshape(dim, dim))).copy()
    raise TypeError(f"expected StateVector or DensityMatrix, got {type(state)}")

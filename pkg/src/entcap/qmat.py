"""Dense complex linear algebra for small multi-qubit operators.

Everything here is a pure function of its inputs; matrices carry an explicit
list of tensor-factor dimensions so reductions (partial trace, partial
transpose) know the subsystem structure.  Factor 0 is the leftmost tensor
factor and composite indices are row-major.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-10


def _frozen_array(values, dtype=complex) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ComplexMatrix:
    """Square complex matrix over a declared tensor factorization."""

    entries: np.ndarray
    subsystem_dims: tuple[int, ...]

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"entries must be square, got shape {arr.shape}")
        dims = tuple(int(d) for d in self.subsystem_dims)
        if not dims or any(d <= 0 for d in dims):
            raise ValueError(f"subsystem_dims must be positive, got {dims}")
        if math.prod(dims) != arr.shape[0]:
            raise ValueError(
                f"product of subsystem_dims {dims} != matrix dimension {arr.shape[0]}"
            )
        object.__setattr__(self, "entries", _frozen_array(arr))
        object.__setattr__(self, "subsystem_dims", dims)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dagger(self) -> "ComplexMatrix":
        return ComplexMatrix(self.entries.conj().T, self.subsystem_dims)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def hermiticity_defect(self) -> float:
        """Largest entry of ``m - m^dagger`` in absolute value."""
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))


@dataclass(frozen=True)
class HermitianSpectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _frozen_array(self.eigenvalues, float))
        object.__setattr__(self, "eigenvectors", _frozen_array(self.eigenvectors))

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def identity(subsystem_dims) -> ComplexMatrix:
    dims = tuple(int(d) for d in subsystem_dims)
    return ComplexMatrix(np.eye(math.prod(dims)), dims)


SIGMA_X = ComplexMatrix([[0, 1], [1, 0]], (2,))
SIGMA_Y = ComplexMatrix([[0, -1j], [1j, 0]], (2,))
SIGMA_Z = ComplexMatrix([[1, 0], [0, -1]], (2,))
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


def kron(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """Tensor product; factor lists concatenate."""
    return ComplexMatrix(
        np.kron(a.entries, b.entries), a.subsystem_dims + b.subsystem_dims
    )


def _check_indices(indices, n: int, what: str) -> tuple[int, ...]:
    idx = tuple(int(i) for i in indices)
    if len(set(idx)) != len(idx):
        raise ValueError(f"{what} contains duplicates: {idx}")
    if any(i < 0 or i >= n for i in idx):
        raise ValueError(f"{what} {idx} out of range for {n} subsystems")
    return idx


def ptrace_raw(arr: np.ndarray, dims, keep) -> np.ndarray:
    """Partial trace on a bare array; ``keep`` lists the factors retained."""
    dims = tuple(dims)
    n = len(dims)
    keep = sorted(keep)
    row = list(range(n))
    col = [i + n if i in keep else i for i in range(n)]
    out = [*keep, *(i + n for i in keep)]
    t = arr.reshape(*dims, *dims)
    d = math.prod(dims[i] for i in keep)
    return np.einsum(t, row + col, out).reshape(d, d)


def partial_trace(m: ComplexMatrix, keep) -> ComplexMatrix:
    """Trace out every factor not listed in ``keep``."""
    idx = _check_indices(keep, len(m.subsystem_dims), "keep set")
    if not idx:
        raise ValueError("keep set must retain at least one subsystem")
    kept = tuple(sorted(idx))
    reduced = ptrace_raw(m.entries, m.subsystem_dims, kept)
    return ComplexMatrix(reduced, tuple(m.subsystem_dims[i] for i in kept))


def ptranspose_raw(arr: np.ndarray, dims, subsystem: int) -> np.ndarray:
    dims = tuple(dims)
    n = len(dims)
    t = arr.reshape(*dims, *dims)
    perm = list(range(2 * n))
    perm[subsystem], perm[subsystem + n] = perm[subsystem + n], perm[subsystem]
    return t.transpose(perm).reshape(arr.shape)


def partial_transpose(m: ComplexMatrix, subsystem: int) -> ComplexMatrix:
    """Transpose the chosen factor's indices only; applying twice is identity."""
    (sub,) = _check_indices([subsystem], len(m.subsystem_dims), "subsystem")
    return ComplexMatrix(
        ptranspose_raw(m.entries, m.subsystem_dims, sub), m.subsystem_dims
    )


def eigh_fixed(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition with a deterministic eigenvector gauge.

    Eigenvalues ascending; each eigenvector is rotated so its
    largest-magnitude component is real and positive.
    """
    w, v = np.linalg.eigh(arr)
    lead = np.argmax(np.abs(v), axis=0)
    phases = v[lead, np.arange(v.shape[1])]
    mags = np.abs(phases)
    safe = np.where(mags > 0, phases / np.where(mags > 0, mags, 1.0), 1.0)
    return w, v * safe.conj()


def hermitian_eig(m: ComplexMatrix) -> HermitianSpectrum:
    """Spectrum of a Hermitian matrix; input symmetrized before decomposition."""
    defect = m.hermiticity_defect()
    if defect > HERMITICITY_TOL:
        raise ValueError(f"matrix is not Hermitian (max asymmetry {defect:.3e})")
    sym = (m.entries + m.entries.conj().T) / 2
    w, v = eigh_fixed(sym)
    return HermitianSpectrum(w, v)


def unitary_from_generator(h: ComplexMatrix) -> ComplexMatrix:
    """exp(i h) for Hermitian h, via the spectral decomposition."""
    spec = hermitian_eig(h)
    v = spec.eigenvectors
    u = (v * np.exp(1j * spec.eigenvalues)) @ v.conj().T
    return ComplexMatrix(u, h.subsystem_dims)

"""Entanglement measures and two-sided distillable-entanglement bounds.

All logarithms are base 2, so every measure is reported in ebits.  Mixed
states get an interval [hashing bound, computable upper bound]; the interval
collapses for the cases where the bounds are known to meet (pure states and
two-qubit states supported on span{|00>, |11>}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import PureState
from .qmat import ComplexMatrix, ptrace_raw, ptranspose_raw

STATE_PSD_TOL = 1e-10
STATE_TRACE_TOL = 1e-8
BELL_DIAGONAL_TOL = 1e-8
MAX_CORRELATED_TOL = 1e-8
PURITY_TOL = 1e-10
TIGHT_TOL = 1e-6

# Columns: |Phi+>, |Phi->, |Psi+>, |Psi->.
BELL_BASIS = np.array(
    [
        [1, 1, 0, 0],
        [0, 0, 1, 1],
        [0, 0, 1, -1],
        [1, -1, 0, 0],
    ],
    dtype=complex,
) / math.sqrt(2)

_SYSY = np.array(
    [
        [0, 0, 0, -1],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
        [-1, 0, 0, 0],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class DistillableInterval:
    """Two-sided bounds on distillable entanglement, in ebits."""

    lower: float
    upper: float
    tight: bool

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if lo < -1e-12 or hi < lo - 1e-12:
            raise ValueError(f"invalid interval [{lo}, {hi}]")
        object.__setattr__(self, "lower", max(lo, 0.0))
        object.__setattr__(self, "upper", max(hi, max(lo, 0.0)))

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def entropy_of_spectrum(eigenvalues: np.ndarray) -> np.ndarray:
    """Base-2 entropy of one or many spectra; zero weights contribute zero."""
    w = np.clip(np.asarray(eigenvalues, dtype=float), 0.0, None)
    logs = np.log2(np.where(w > 0.0, w, 1.0))
    return -np.sum(w * logs, axis=-1)


def _validated_spectrum(rho: ComplexMatrix) -> np.ndarray:
    if rho.hermiticity_defect() > STATE_TRACE_TOL:
        raise ValueError("density matrix must be Hermitian")
    tr = rho.trace()
    if abs(tr - 1.0) > STATE_TRACE_TOL:
        raise ValueError(f"density matrix must have unit trace, got {tr!r}")
    w = np.linalg.eigvalsh((rho.entries + rho.entries.conj().T) / 2)
    if w[0] < -STATE_PSD_TOL:
        raise ValueError(f"density matrix has negative eigenvalue {w[0]:.3e}")
    return w


def von_neumann_entropy(rho: ComplexMatrix) -> float:
    """-sum lambda log2 lambda over the spectrum of a density matrix."""
    return float(entropy_of_spectrum(_validated_spectrum(rho)))


def binary_entropy(p: float) -> float:
    """H(p) in bits."""
    p = float(p)
    if p < -1e-12 or p > 1 + 1e-12:
        raise ValueError(f"probability out of range: {p}")
    p = min(max(p, 0.0), 1.0)
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _cut_complement(cut, n: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    side = tuple(sorted(int(i) for i in cut))
    if not side or len(set(side)) != len(side) or any(i < 0 or i >= n for i in side):
        raise ValueError(f"invalid cut {cut} for {n} subsystems")
    other = tuple(i for i in range(n) if i not in side)
    if not other:
        raise ValueError(f"cut {cut} leaves nothing on the other side")
    return side, other


def pure_reduced_spectrum(psi: PureState, cut) -> np.ndarray:
    """Schmidt spectrum of a pure state across the given cut."""
    side, other = _cut_complement(cut, len(psi.subsystem_dims))
    dims = psi.subsystem_dims
    t = psi.amplitudes.reshape(dims)
    mat = t.transpose(side + other).reshape(
        math.prod(dims[i] for i in side), math.prod(dims[i] for i in other)
    )
    if mat.shape[0] <= mat.shape[1]:
        gram = mat @ mat.conj().T
    else:
        gram = mat.conj().T @ mat
    return np.linalg.eigvalsh(gram)

def pure_entanglement(psi: PureState, cut) -> float:
    """Entropy of the reduced state across the cut, in ebits."""
    return float(entropy_of_spectrum(pure_reduced_spectrum(psi, cut)))


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(mat)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def concurrence(rho: ComplexMatrix) -> float:
    """Wootters concurrence of a two-qubit density matrix."""
    if rho.subsystem_dims != (2, 2):
        raise ValueError("concurrence is defined for two-qubit states")
    _validated_spectrum(rho)
    r = (rho.entries + rho.entries.conj().T) / 2
    tilde = _SYSY @ r.conj() @ _SYSY
    root = _psd_sqrt(r)
    lam = np.sqrt(np.clip(np.linalg.eigvalsh(root @ tilde @ root), 0.0, None))
    lam = np.sort(lam)[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def entanglement_of_formation(rho: ComplexMatrix) -> float:
    """Wootters closed form from the concurrence."""
    c = concurrence(rho)
    return binary_entropy((1.0 + math.sqrt(max(0.0, 1.0 - c * c))) / 2.0)


def hashing_lower(rho: ComplexMatrix, cut) -> float:
    """max(0, S(rho_A) - S(rho), S(rho_B) - S(rho)) across the cut."""
    side, other = _cut_complement(cut, len(rho.subsystem_dims))
    s_joint = von_neumann_entropy(rho)
    dims = rho.subsystem_dims
    s_a = entropy_of_spectrum(
        np.linalg.eigvalsh(ptrace_raw(rho.entries, dims, side))
    )
    s_b = entropy_of_spectrum(
        np.linalg.eigvalsh(ptrace_raw(rho.entries, dims, other))
    )
    return float(max(0.0, s_a - s_joint, s_b - s_joint))


def negativity_upper(rho: ComplexMatrix, cut) -> float:
    """Logarithmic negativity log2 of the trace norm after partial transpose."""
    side, other = _cut_complement(cut, len(rho.subsystem_dims))
    _validated_spectrum(rho)
    arr = rho.entries
    for sub in other:
        arr = ptranspose_raw(arr, rho.subsystem_dims, sub)
    trace_norm = float(np.sum(np.abs(np.linalg.eigvalsh((arr + arr.conj().T) / 2))))
    return float(max(0.0, math.log2(trace_norm)))


class NotBellDiagonalError(ValueError):
    """Raised when a state has no Bell-basis diagonal form."""


def bell_weights(rho: ComplexMatrix) -> np.ndarray:
    """Bell-basis weights of a two-qubit state, rejecting off-diagonal mass."""
    if rho.subsystem_dims != (2, 2):
        raise NotBellDiagonalError("state is not a two-qubit state")
    d = BELL_BASIS.conj().T @ rho.entries @ BELL_BASIS
    off = float(np.max(np.abs(d - np.diag(np.diag(d)))))
    if off > BELL_DIAGONAL_TOL:
        raise NotBellDiagonalError(f"off-diagonal Bell mass {off:.3e}")
    return np.real(np.diag(d))


def bell_diagonal_ere(rho: ComplexMatrix) -> float:
    """Relative entropy of entanglement for Bell-diagonal states."""
    p_max = float(np.max(bell_weights(rho)))
    if p_max <= 0.5:
        return 0.0
    return 1.0 - binary_entropy(p_max)


def is_maximally_correlated(rho: ComplexMatrix, tol: float = MAX_CORRELATED_TOL) -> bool:
    """True when a two-qubit state is supported on span{|00>, |11>}."""
    if rho.subsystem_dims != (2, 2):
        return False
    mask = np.ones((4, 4), dtype=bool)
    mask[np.ix_([0, 3], [0, 3])] = False
    return float(np.max(np.abs(rho.entries[mask]))) < tol


def distillable_interval(rho: ComplexMatrix, cut) -> DistillableInterval:
    """Two-sided bounds: hashing from below, the best computable bound above.

    The upper edge is the minimum of the logarithmic negativity, the
    Bell-diagonal closed form when it applies, and the reduced entropy when
    the state is pure.  Two-qubit states supported on span{|00>, |11>} have
    a tight hashing bound, so the interval collapses there.
    """
    side, _ = _cut_complement(cut, len(rho.subsystem_dims))
    lower = hashing_lower(rho, cut)
    uppers = [negativity_upper(rho, cut)]
    spectrum = _validated_spectrum(rho)
    if spectrum[-1] >= 1.0 - PURITY_TOL:
        s_a = entropy_of_spectrum(
            np.linalg.eigvalsh(ptrace_raw(rho.entries, rho.subsystem_dims, side))
        )
        uppers.append(float(max(0.0, s_a)))
    try:
        uppers.append(bell_diagonal_ere(rho))
    except NotBellDiagonalError:
        pass
    upper = min(uppers)
    if is_maximally_correlated(rho):
        upper = lower
    upper = max(upper, lower)
    return DistillableInterval(lower, upper, bool(upper - lower < TIGHT_TOL))

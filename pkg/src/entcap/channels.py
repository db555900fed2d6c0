"""Input states and random-unitary channels on two qubits.

Channels are finite mixtures of unitary conjugations.  The four-qubit case
(one qubit ancilla per side) uses the factor ordering (A, A', B, B'); the
entangling cut is AA'|BB' and channels act on factors A and B only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qmat import (
    ComplexMatrix,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    kron,
    unitary_from_generator,
)

UNITARITY_TOL = 1e-10
WEIGHT_SUM_TOL = 1e-12
NORM_TOL = 1e-12

_XX = kron(SIGMA_X, SIGMA_X).entries
_YY = kron(SIGMA_Y, SIGMA_Y).entries
_ZZ = kron(SIGMA_Z, SIGMA_Z).entries


@dataclass(frozen=True)
class PureState:
    """Normalized complex vector over a declared tensor factorization."""

    amplitudes: np.ndarray
    subsystem_dims: tuple[int, ...]

    def __post_init__(self):
        amps = np.array(np.asarray(self.amplitudes, dtype=complex).ravel())
        dims = tuple(int(d) for d in self.subsystem_dims)
        if math.prod(dims) != amps.size:
            raise ValueError(
                f"product of subsystem_dims {dims} != vector length {amps.size}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |psi| = {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "subsystem_dims", dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> ComplexMatrix:
        a = self.amplitudes
        return ComplexMatrix(np.outer(a, a.conj()), self.subsystem_dims)


@dataclass(frozen=True)
class CanonicalParams:
    """Nonlocal angles of a two-qubit unitary, in the canonical ordering cell."""

    xi_x: float
    xi_y: float
    xi_z: float = 0.0

    def __post_init__(self):
        x, y, z = float(self.xi_x), float(self.xi_y), float(self.xi_z)
        if not (math.pi / 4 + 1e-12 >= x >= y >= abs(z) >= 0.0):
            raise ValueError(
                "canonical ordering pi/4 >= xi_x >= xi_y >= |xi_z| >= 0 violated: "
                f"({x}, {y}, {z})"
            )
        object.__setattr__(self, "xi_x", x)
        object.__setattr__(self, "xi_y", y)
        object.__setattr__(self, "xi_z", z)


def canonicalize_params(xi_x: float, xi_y: float, xi_z: float = 0.0) -> CanonicalParams:
    """Map an arbitrary angle triple to an equivalent canonical one.

    Each angle is folded into (-pi/4, pi/4] (shifts by pi/2 compose the
    unitary with a local sigma pair), magnitudes are sorted descending, and
    pairwise sign flips (also local) push any leftover sign onto the last
    angle.
    """

    def fold(a: float) -> float:
        a = math.remainder(a, math.pi / 2)
        if a <= -math.pi / 4 + 1e-15:
            a += math.pi / 2
        return a

    vals = sorted((fold(a) for a in (xi_x, xi_y, xi_z)), key=abs, reverse=True)
    if vals[0] < 0 and vals[1] < 0:
        vals[0], vals[1] = -vals[0], -vals[1]
    elif vals[0] < 0:
        vals[0], vals[2] = -vals[0], -vals[2]
    elif vals[1] < 0:
        vals[1], vals[2] = -vals[1], -vals[2]
    return CanonicalParams(vals[0], vals[1], vals[2])


@dataclass(frozen=True)
class RandomUnitaryChannel:
    """Finite mixture of unitary conjugations acting on a fixed factor pair."""

    branches: tuple[tuple[float, ComplexMatrix], ...]

    def __post_init__(self):
        if not self.branches:
            raise ValueError("channel needs at least one branch")
        branches = tuple((float(w), u) for w, u in self.branches)
        weights = np.array([w for w, _ in branches])
        if np.any(weights <= 0):
            raise ValueError("branch weights must be positive")
        if abs(float(weights.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"branch weights sum to {weights.sum()!r}, expected 1")
        dims = branches[0][1].subsystem_dims
        for _, u in branches:
            if u.subsystem_dims != dims:
                raise ValueError("all branches must share subsystem structure")
            defect = float(np.max(np.abs(u.entries.conj().T @ u.entries - np.eye(u.dim))))
            if defect > UNITARITY_TOL:
                raise ValueError(f"branch is not unitary (defect {defect:.3e})")
        object.__setattr__(self, "branches", branches)

    @property
    def dim(self) -> int:
        return self.branches[0][1].dim

    @property
    def subsystem_dims(self) -> tuple[int, ...]:
        return self.branches[0][1].subsystem_dims

    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.branches])

    def unitary_stack(self) -> np.ndarray:
        return np.stack([u.entries for _, u in self.branches])


@dataclass(frozen=True)
class GaussianNoiseSpec:
    """CNOT-class interaction angle with Gaussian spread."""

    mean_xi: float
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        object.__setattr__(self, "mean_xi", float(self.mean_xi))
        object.__setattr__(self, "sigma", float(self.sigma))


def nonlocal_unitary(xi_x: float, xi_y: float = 0.0, xi_z: float = 0.0) -> ComplexMatrix:
    """exp(i (xi_x XX + xi_y YY + xi_z ZZ)) for arbitrary angles."""
    gen = ComplexMatrix(xi_x * _XX + xi_y * _YY + xi_z * _ZZ, (2, 2))
    return unitary_from_generator(gen)


def canonical_unitary(p: CanonicalParams) -> ComplexMatrix:
    """Canonical-form unitary for validated nonlocal angles."""
    return nonlocal_unitary(p.xi_x, p.xi_y, p.xi_z)


def xx_unitary(xi: float) -> ComplexMatrix:
    """CNOT-class rotation exp(i xi XX)."""
    return nonlocal_unitary(xi)


def wrap_alpha(alpha: float) -> float:
    """Fold an angle into [0, pi/2] using the symmetries of cos^2."""
    a = float(alpha) % math.pi
    if a > math.pi / 2:
        a = math.pi - a
    return a


def optimal_state(alpha: float, sign: int = +1) -> PureState:
    """cos(a)|00> + sign * i sin(a)|11> with a wrapped to [0, pi/2]."""
    if sign not in (+1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    a = wrap_alpha(alpha)
    amps = np.zeros(4, dtype=complex)
    amps[0] = math.cos(a)
    amps[3] = 1j * sign * math.sin(a)
    return PureState(amps, (2, 2))


def appendix_amplitudes(angles: np.ndarray) -> np.ndarray:
    """Vectorized 16-amplitude builder from (..., 30) angle arrays.

    The first 15 entries are magnitude angles, the last 15 the phases of
    amplitudes 2..16; amplitude 1 is real by convention.  The magnitude
    chain is sin(phi_{x-1}) prod_{y>=x} cos(phi_y) with phi_0 = pi/2, which
    is exactly normalized for any input.
    """
    angles = np.asarray(angles, dtype=float)
    if angles.shape[-1] != 30:
        raise ValueError(f"expected 30 angles, got {angles.shape[-1]}")
    phi = angles[..., :15]
    theta = angles[..., 15:]
    cos = np.cos(phi)
    sin = np.sin(phi)
    mags = np.empty(angles.shape[:-1] + (16,))
    suffix = np.cumprod(cos[..., ::-1], axis=-1)[..., ::-1]
    mags[..., 0] = suffix[..., 0]
    mags[..., 1:15] = sin[..., :14] * suffix[..., 1:]
    mags[..., 15] = sin[..., 14]
    amps = mags.astype(complex)
    amps[..., 1:] *= np.exp(1j * theta)
    return amps


def appendix_state(angles) -> PureState:
    """Four-qubit state over (A, A', B, B') from 30 real parameters."""
    angles = np.asarray(angles, dtype=float).ravel()
    if angles.size != 30:
        raise ValueError(f"expected 30 angles, got {angles.size}")
    return PureState(appendix_amplitudes(angles), (2, 2, 2, 2))


def mixture_channel(entries) -> RandomUnitaryChannel:
    """Normalize weights and assemble a channel from unitaries or angle triples."""
    entries = list(entries)
    if not entries:
        raise ValueError("mixture needs at least one entry")
    weights = np.array([float(w) for w, _ in entries])
    if np.any(weights <= 0):
        raise ValueError("mixture weights must be positive")
    weights = weights / weights.sum()
    branches = []
    for w, (weight, op) in zip(weights, entries):
        if isinstance(op, CanonicalParams):
            u = canonical_unitary(op)
        elif isinstance(op, ComplexMatrix):
            u = op
        else:
            raise TypeError(f"unsupported branch operator {type(op).__name__}")
        branches.append((float(w), u))
    return RandomUnitaryChannel(tuple(branches))


def gaussian_channel(spec: GaussianNoiseSpec) -> RandomUnitaryChannel:
    """Exact two-branch form of a Gaussian-averaged CNOT-class rotation.

    Averaging exp(i xi XX) over xi ~ N(mean, sigma^2) leaves only the
    even moments: U(mean + d) = U(mean)(cos d + i sin d XX), the cross terms
    vanish by symmetry, and E[cos^2 d] = (1 + exp(-2 sigma^2)) / 2.  The
    residual i XX factor equals U(pi/2) up to a global phase, so the average
    is a mixture of U(mean) and U(mean + pi/2).
    """
    q = (1.0 + math.exp(-2.0 * spec.sigma**2)) / 2.0
    branches = [(q, xx_unitary(spec.mean_xi))]
    if 1.0 - q > 0.0:
        branches.append((1.0 - q, xx_unitary(spec.mean_xi + math.pi / 2)))
    return RandomUnitaryChannel(tuple(branches))


def embed_two_factor(u: np.ndarray, dims: tuple[int, ...], pos: tuple[int, int]) -> np.ndarray:
    """Lift an operator on factors ``pos`` to the full space, identity elsewhere."""
    n = len(dims)
    i, j = pos
    others = [k for k in range(n) if k not in (i, j)]
    rest = math.prod(dims[k] for k in others) if others else 1
    if u.shape[0] != dims[i] * dims[j]:
        raise ValueError(
            f"operator dimension {u.shape[0]} does not match factors {pos} of {dims}"
        )
    full = np.kron(u, np.eye(rest))
    order = [i, j, *others]
    tdims = [dims[k] for k in order]
    t = full.reshape(*tdims, *tdims)
    inv = list(np.argsort(order))
    perm = [*inv, *(k + n for k in inv)]
    d = math.prod(dims)
    return t.transpose(perm).reshape(d, d)


def _resolve_branches(
    ch: RandomUnitaryChannel, dims: tuple[int, ...], acting_on
) -> np.ndarray:
    if acting_on is None:
        if ch.dim != math.prod(dims):
            raise ValueError(
                f"channel dimension {ch.dim} does not match state dimension "
                f"{math.prod(dims)}; pass acting_on to embed"
            )
        return ch.unitary_stack()
    i, j = (int(k) for k in acting_on)
    if i == j or not (0 <= i < len(dims)) or not (0 <= j < len(dims)):
        raise ValueError(f"acting_on {acting_on} invalid for factors {dims}")
    return np.stack(
        [embed_two_factor(u.entries, dims, (i, j)) for _, u in ch.branches]
    )


def apply_linear(
    ch: RandomUnitaryChannel, m: ComplexMatrix, acting_on=None
) -> ComplexMatrix:
    """Raw linear action sum_k p_k U_k m U_k^dagger, no state validation."""
    us = _resolve_branches(ch, m.subsystem_dims, acting_on)
    w = ch.weights()
    out = np.einsum("k,kij,jl,kml->im", w, us, m.entries, us.conj())
    return ComplexMatrix(out, m.subsystem_dims)


STATE_PSD_TOL = 1e-10
STATE_TRACE_TOL = 1e-8


def apply(ch: RandomUnitaryChannel, rho: ComplexMatrix, acting_on=None) -> ComplexMatrix:
    """Apply the channel to a density matrix; output is symmetrized."""
    if rho.hermiticity_defect() > STATE_TRACE_TOL:
        raise ValueError("input state must be Hermitian")
    tr = rho.trace()
    if abs(tr - 1.0) > STATE_TRACE_TOL:
        raise ValueError(f"input state must have unit trace, got {tr!r}")
    evals = np.linalg.eigvalsh((rho.entries + rho.entries.conj().T) / 2)
    if evals[0] < -STATE_PSD_TOL:
        raise ValueError(f"input state has negative eigenvalue {evals[0]:.3e}")
    out = apply_linear(ch, rho, acting_on).entries
    return ComplexMatrix((out + out.conj().T) / 2, rho.subsystem_dims)


def lift_to_ancilla(ch: RandomUnitaryChannel) -> RandomUnitaryChannel:
    """Extend a two-qubit channel with one ancilla qubit per side.

    The result acts on (A, A', B, B'); branch unitaries touch factors A and
    B only.
    """
    if ch.subsystem_dims != (2, 2):
        raise ValueError("only two-qubit channels can be lifted")
    dims = (2, 2, 2, 2)
    branches = tuple(
        (w, ComplexMatrix(embed_two_factor(u.entries, dims, (0, 2)), dims))
        for w, u in ch.branches
    )
    return RandomUnitaryChannel(branches)

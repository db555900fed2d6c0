"""Single-shot capacity optimizers for random-unitary channels.

Two strategies:

* Method I restricts inputs to the two-qubit family cos(a)|00> +/- i sin(a)|11>
  and scans the single angle, valid when every branch is a CNOT-class
  rotation (all generators proportional to XX).
* Method II ascends the full 30-angle parametrization of a four-qubit pure
  state (one ancilla qubit per side) with finite-difference gradients and
  random restarts.  Its results are lower bounds on the capacities.

Reported values use the lower edge of the distillable-entanglement interval
of the output state, so an up-direction value is always an achievable gain.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import multiprocessing

import numpy as np

from .channels import (
    PureState,
    RandomUnitaryChannel,
    appendix_amplitudes,
    appendix_state,
    apply,
    lift_to_ancilla,
    mixture_channel,
    optimal_state,
)
from .entanglement import (
    BELL_BASIS,
    DistillableInterval,
    distillable_interval,
    entropy_of_spectrum,
    pure_entanglement,
)
from .qmat import ComplexMatrix

DIRECTIONS = ("up", "down")
ALPHA_SCAN_STEP = 1e-3
ALPHA_REFINE_TOL = 1e-7
CNOT_CLASS_TOL = 1e-8


def _check_direction(direction: str) -> str:
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    return direction


@dataclass(frozen=True)
class OptimizerConfig:
    """Gradient-ascent knobs for Method II."""

    restarts: int = 50
    fd_step: float = 1e-4
    initial_step: float = 0.05
    shrink_factor: float = 0.5
    convergence_tol: float = 1e-7
    max_iters: int = 5000
    rng_seed: int = 0

    def __post_init__(self):
        if self.restarts <= 0 or self.max_iters <= 0:
            raise ValueError("restarts and max_iters must be positive")
        if self.fd_step <= 0 or self.initial_step <= 0 or self.convergence_tol <= 0:
            raise ValueError("step sizes and tolerance must be positive")
        if not (0.0 < self.shrink_factor < 1.0):
            raise ValueError("shrink_factor must lie in (0, 1)")


@dataclass(frozen=True)
class CapacityResult:
    """Optimizer outcome for one channel and direction."""

    direction: str
    value: float
    alpha: float | None
    sign: int | None
    angles: np.ndarray | None
    input_entanglement: float
    output_interval: DistillableInterval
    restarts_used: int
    converged: bool
    iterations: int

    def __post_init__(self):
        if self.angles is not None:
            arr = np.array(np.asarray(self.angles, dtype=float))
            arr.setflags(write=False)
            object.__setattr__(self, "angles", arr)


def bell_diagonal_phases(u: ComplexMatrix, tol: float = CNOT_CLASS_TOL):
    """Bell-basis diagonal of a 4x4 operator, or None if off-diagonal mass remains."""
    d = BELL_BASIS.conj().T @ u.entries @ BELL_BASIS
    off = float(np.max(np.abs(d - np.diag(np.diag(d)))))
    if off > tol:
        return None
    return np.diag(d)


def is_cnot_class(u: ComplexMatrix, tol: float = CNOT_CLASS_TOL) -> bool:
    """True when u equals exp(i xi XX) up to a global phase.

    Such unitaries are Bell diagonal with the Phi+/Psi+ phases equal and the
    Phi-/Psi- phases equal.
    """
    if u.dim != 4:
        return False
    d = bell_diagonal_phases(u, tol)
    if d is None:
        return False
    return bool(abs(d[0] - d[2]) < tol and abs(d[1] - d[3]) < tol)


def _require_cnot_branches(ch: RandomUnitaryChannel):
    for _, u in ch.branches:
        if not is_cnot_class(u):
            raise ValueError(
                "Method I needs every branch in the CNOT class "
                "(generator proportional to XX)"
            )


class _FamilyObjective:
    """Batched Method I objectives over the one-angle input family."""

    def __init__(self, ch: RandomUnitaryChannel):
        if ch.subsystem_dims != (2, 2):
            raise ValueError("Method I operates on two-qubit channels")
        self.us = ch.unitary_stack()
        self.w = ch.weights()
        root = np.sqrt(self.w)
        self.sqrt_ww = root[:, None] * root[None, :]

    def gains(self, alphas: np.ndarray, sign: int):
        """Return (up, down) objective arrays for a batch of input angles."""
        alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
        b = alphas.size
        cos, sin = np.cos(alphas), np.sin(alphas)
        psi = np.zeros((b, 4), dtype=complex)
        psi[:, 0] = cos
        psi[:, 3] = 1j * sign * sin
        in_ent = entropy_of_spectrum(np.stack([cos**2, sin**2], axis=-1))

        phi = psi @ self.us.transpose(0, 2, 1)  # (K, b, 4)
        gram = np.einsum("kbi,lbi->bkl", phi.conj(), phi) * self.sqrt_ww
        s_out = entropy_of_spectrum(np.linalg.eigvalsh(gram))
        pr = phi.reshape(-1, b, 2, 2)
        red_a = np.einsum("k,kbij,kblj->bil", self.w, pr, pr.conj())
        red_b = np.einsum("k,kbji,kbjl->bil", self.w, pr, pr.conj())
        s_a = entropy_of_spectrum(np.linalg.eigvalsh(red_a))
        s_b = entropy_of_spectrum(np.linalg.eigvalsh(red_b))
        d_lo = np.maximum(0.0, np.maximum(s_a, s_b) - s_out)
        return d_lo - in_ent, in_ent - d_lo


def _golden_max(f, lo: float, hi: float, tol: float) -> float:
    """Argmax of a unimodal scalar function by golden-section search."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
    return (lo + hi) / 2.0


def _finalize_family_result(
    ch: RandomUnitaryChannel, direction: str, alpha: float, sign: int, iterations: int
) -> CapacityResult:
    psi = optimal_state(alpha, sign)
    out = apply(ch, psi.projector())
    interval = distillable_interval(out, (0,))
    in_ent = pure_entanglement(psi, (0,))
    directed = interval.lower - in_ent if direction == "up" else in_ent - interval.lower
    return CapacityResult(
        direction=direction,
        value=max(0.0, directed),
        alpha=float(alpha),
        sign=int(sign),
        angles=None,
        input_entanglement=in_ent,
        output_interval=interval,
        restarts_used=0,
        converged=True,
        iterations=iterations,
    )


def method1_capacity(ch: RandomUnitaryChannel, direction: str) -> CapacityResult:
    """Scan the optimal input family; exact for CNOT-class mixtures."""
    _check_direction(direction)
    _require_cnot_branches(ch)
    objective = _FamilyObjective(ch)
    which = 0 if direction == "up" else 1

    n = int(math.ceil((math.pi / 2) / ALPHA_SCAN_STEP)) + 1
    alphas = np.linspace(0.0, math.pi / 2, n)
    evals = n * 2

    best = None
    for sign in (+1, -1):
        curve = objective.gains(alphas, sign)[which]
        i = int(np.argmax(curve))
        lo = alphas[max(0, i - 1)]
        hi = alphas[min(n - 1, i + 1)]

        def scalar(a, s=sign):
            return float(objective.gains(np.array([a]), s)[which][0])

        alpha_star = _golden_max(scalar, lo, hi, ALPHA_REFINE_TOL)
        value = scalar(alpha_star)
        evals += 2 * int(math.log((hi - lo) / ALPHA_REFINE_TOL) / math.log(1.618)) + 4
        if best is None or value > best[0]:
            best = (value, alpha_star, sign)

    _, alpha_star, sign = best
    return _finalize_family_result(ch, direction, alpha_star, sign, evals)


def unitary_capacity(
    u: ComplexMatrix, direction: str, cfg: OptimizerConfig | None = None
) -> CapacityResult:
    """Capacity of a single unitary; CNOT-class inputs use the family scan."""
    _check_direction(direction)
    defect = float(np.max(np.abs(u.entries.conj().T @ u.entries - np.eye(u.dim))))
    if u.dim != 4 or defect > 1e-10:
        raise ValueError("unitary_capacity expects a 4x4 unitary")
    ch = mixture_channel([(1.0, u)])
    if is_cnot_class(u):
        return method1_capacity(ch, direction)
    return method2_capacity(ch, direction, cfg or OptimizerConfig())


class _LiftedObjective:
    """Batched Method II objective over the 30-angle four-qubit family.

    Outputs of a pure input are rank-K mixtures, so the joint entropy comes
    from the K x K Gram matrix of the branch images instead of the full
    16 x 16 spectrum.
    """

    def __init__(self, unitaries: np.ndarray, weights: np.ndarray, direction: str):
        self.us_t = unitaries.transpose(0, 2, 1).copy()
        self.w = weights
        root = np.sqrt(weights)
        self.sqrt_ww = root[:, None] * root[None, :]
        self.direction = _check_direction(direction)

    def from_angles(self, angles: np.ndarray) -> np.ndarray:
        return self.from_states(appendix_amplitudes(np.atleast_2d(angles)))

    def from_states(self, psi: np.ndarray) -> np.ndarray:
        b = psi.shape[0]
        pin = psi.reshape(b, 4, 4)
        gin = np.einsum("bai,baj->bij", pin.conj(), pin)
        in_ent = entropy_of_spectrum(np.linalg.eigvalsh(gin))

        phi = psi @ self.us_t  # (K, b, 16)
        gram = np.einsum("kbi,lbi->bkl", phi.conj(), phi) * self.sqrt_ww
        s_out = entropy_of_spectrum(np.linalg.eigvalsh(gram))
        pr = phi.reshape(-1, b, 4, 4)
        red_bb = np.einsum("k,kbaj,kbal->bjl", self.w, pr, pr.conj())
        s_bb = entropy_of_spectrum(np.linalg.eigvalsh(red_bb))
        if self.direction == "up":
            return s_bb - s_out - in_ent
        red_aa = np.einsum("k,kbja,kbla->bjl", self.w, pr, pr.conj())
        s_aa = entropy_of_spectrum(np.linalg.eigvalsh(red_aa))
        d_lo = np.maximum(0.0, np.maximum(s_aa, s_bb) - s_out)
        return in_ent - d_lo


def fd_gradient(objective: _LiftedObjective, x: np.ndarray, base: float, h: float):
    """One-sided finite-difference gradient of the batched objective."""
    probes = x[None, :] + h * np.eye(30)
    return (objective.from_angles(probes) - base) / h


def _ascend(objective: _LiftedObjective, cfg: OptimizerConfig, rng: np.random.Generator):
    x = rng.uniform(0.0, 2.0 * math.pi, 30)
    f = float(objective.from_angles(x)[0])
    converged = False
    iters = 0
    for iters in range(1, cfg.max_iters + 1):
        grad = fd_gradient(objective, x, f, cfg.fd_step)
        gnorm = float(np.linalg.norm(grad))
        if gnorm == 0.0:
            converged = True
            break
        direction = grad / gnorm

        steps = []
        s = cfg.initial_step
        while s * gnorm >= cfg.convergence_tol and len(steps) < 64:
            steps.append(s)
            s *= cfg.shrink_factor
        if not steps:
            steps = [cfg.initial_step]
        candidates = x[None, :] + np.asarray(steps)[:, None] * direction[None, :]
        values = objective.from_angles(candidates)
        k = int(np.argmax(values))
        improvement = float(values[k]) - f
        if improvement < cfg.convergence_tol:
            converged = True
            break
        # backtracking acceptance: accepted steps never decrease the objective
        x = candidates[k]
        f = float(values[k])
    return f, x % (2.0 * math.pi), iters, converged


def _restart_payload(ch: RandomUnitaryChannel):
    lifted = ch if ch.subsystem_dims == (2, 2, 2, 2) else lift_to_ancilla(ch)
    return lifted.unitary_stack(), lifted.weights()


def _run_restart(args):
    unitaries, weights, direction, cfg, restart_index = args
    objective = _LiftedObjective(unitaries, weights, direction)
    dir_code = DIRECTIONS.index(direction)
    rng = np.random.default_rng([cfg.rng_seed, dir_code, restart_index])
    return _ascend(objective, cfg, rng)


def method2_capacity(
    ch: RandomUnitaryChannel,
    direction: str,
    cfg: OptimizerConfig | None = None,
    jobs: int = 1,
) -> CapacityResult:
    """Multi-restart gradient ascent over four-qubit pure inputs.

    The reported value is a lower bound on the capacity.  Restarts are
    independent; ``jobs`` > 1 runs them in separate processes without
    changing any result.
    """
    _check_direction(direction)
    cfg = cfg or OptimizerConfig()
    unitaries, weights = _restart_payload(ch)
    tasks = [(unitaries, weights, direction, cfg, r) for r in range(cfg.restarts)]
    if jobs > 1 and cfg.restarts > 1:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=min(jobs, cfg.restarts), mp_context=ctx) as pool:
            outcomes = list(pool.map(_run_restart, tasks, chunksize=1))
    else:
        outcomes = [_run_restart(t) for t in tasks]

    best_index = max(range(len(outcomes)), key=lambda r: (outcomes[r][0], -r))
    _, best_x, best_iters, _ = outcomes[best_index]
    converged = any(o[3] for o in outcomes)

    psi = appendix_state(best_x)
    lifted = ch if ch.subsystem_dims == (2, 2, 2, 2) else lift_to_ancilla(ch)
    out = apply(lifted, psi.projector())
    cut = (0, 1)
    interval = distillable_interval(out, cut)
    in_ent = pure_entanglement(psi, cut)
    directed = interval.lower - in_ent if direction == "up" else in_ent - interval.lower
    return CapacityResult(
        direction=direction,
        value=max(0.0, directed),
        alpha=None,
        sign=None,
        angles=best_x,
        input_entanglement=in_ent,
        output_interval=interval,
        restarts_used=cfg.restarts,
        converged=converged,
        iterations=best_iters,
    )


def objective_gain(psi: PureState, ch: RandomUnitaryChannel, direction: str) -> float:
    """One evaluation of the optimizer objective at a given pure input.

    Two-qubit inputs use the A|B cut; four-qubit inputs use AA'|BB' with the
    channel acting on A and B.
    """
    _check_direction(direction)
    if psi.subsystem_dims == (2, 2):
        if ch.subsystem_dims != (2, 2):
            raise ValueError("two-qubit input needs a two-qubit channel")
        channel, cut, keep_b = ch, (0,), (1,)
    elif psi.subsystem_dims == (2, 2, 2, 2):
        channel = ch if ch.subsystem_dims == (2, 2, 2, 2) else lift_to_ancilla(ch)
        cut, keep_b = (0, 1), (2, 3)
    else:
        raise ValueError(f"unsupported input factorization {psi.subsystem_dims}")

    out = apply(channel, psi.projector())
    in_ent = pure_entanglement(psi, cut)
    if direction == "up":
        from .entanglement import von_neumann_entropy
        from .qmat import partial_trace

        s_out = von_neumann_entropy(out)
        s_b = von_neumann_entropy(partial_trace(out, keep_b))
        return float(s_b - s_out - in_ent)
    from .entanglement import hashing_lower

    return float(in_ent - hashing_lower(out, cut))

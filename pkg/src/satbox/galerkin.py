"""Truncated spectral dynamics of the controlled flow and adjoint steering.

States are coefficient vectors over the canonical (unnormalized)
eigenfields with frequency entries at most a cutoff.  The evolution is

    du_c/dt = -lambda_c u_c - B(u,u)_c - h_c + eta_c,

where the quadratic term is assembled once as a sparse symmetric
coefficient table T[c][(a,b)] = <sym product of modes a,b, mode c> /
|mode c|^2 with a <= b, and applied through the compiled kernels.  The
control eta is piecewise constant in time and vanishes outside the
control set: the branches spanned by the seed fields together with all
their pairwise projected products.

Steering minimizes the squared dissipation-weighted (V) distance to a
target at the final time by plain gradient descent with an Armijo
backtracking line search; the gradient is the exact discrete adjoint of
the fixed-step RK4 integrator, checked against finite differences in the
test suite.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .basis import DomainSpec, EigenMode, ModeKey, mode_from_key
from .interact import FieldExpansion, advection_coeffs, project_components
from .saturation import f_l_step, mode_keys_up_to, seed_set

TENSOR_PRUNE_TOL = 1e-14


def worker_count() -> int:
    """Worker cap for assembly, from SATSPEC_THREADS (default: hardware count)."""
    env = os.environ.get("SATSPEC_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class GalerkinSystem:
    """Immutable truncated system: modes, dissipation rates, quadratic
    coefficient table in COO form (diagonal entries pre-halved), constant
    forcing, and the control branch set."""

    domain: DomainSpec
    cutoff: int
    keys: tuple
    lam: np.ndarray
    norm_sq: np.ndarray
    c_idx: np.ndarray
    a_idx: np.ndarray
    b_idx: np.ndarray
    val: np.ndarray
    h: np.ndarray
    control_idx: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.keys)

    @property
    def v_weights(self) -> np.ndarray:
        return self.lam / float(self.domain.nu) * self.norm_sq

    def index_of(self, key: ModeKey) -> int:
        return self.keys.index(key)

    def vector_from_expansion(self, expansion: FieldExpansion) -> np.ndarray:
        u = np.zeros(self.n_modes)
        for key, c in expansion.items():
            u[self.keys.index(key)] = float(c)
        return u


def _pair_entries(args):
    """Tensor entries for a chunk of mode pairs (one worker task)."""
    lengths, nu, cutoff, keys, pair_slice = args
    domain = DomainSpec(*lengths, nu)
    key_pos = {key: i for i, key in enumerate(keys)}
    modes = [mode_from_key(key, domain) for key in keys]
    L = tuple(float(x) for x in lengths)
    out = []
    for ia, ib in pair_slice:
        ma, mb = modes[ia], modes[ib]
        raw = advection_coeffs(ma.k, tuple(map(float, ma.w)), mb.k, tuple(map(float, mb.w)), L)
        scale = math.pi if ia != ib else math.pi / 2  # halve the diagonal once here
        for n, z in raw.items():
            if max(n) > cutoff:
                continue
            alphas, _ = project_components(n, z, domain)
            for j, alpha in enumerate(alphas):
                t = scale * alpha
                if abs(t) > TENSOR_PRUNE_TOL:
                    out.append((key_pos[(j + 1, n)], ia, ib, t))
    return out


def assemble(domain: DomainSpec, cutoff: int, h_spec: FieldExpansion | None = None) -> GalerkinSystem:
    """Build the truncated system at the given frequency cutoff."""
    if cutoff < 3:
        raise ValueError("cutoff must be at least 3")
    domain = domain.as_float()
    keys = tuple(mode_keys_up_to(cutoff))
    modes = [mode_from_key(key, domain) for key in keys]
    lam = np.array(
        [float(domain.nu) * math.pi**2 * sum((k[i] / domain.lengths[i]) ** 2 for i in range(3))
         for _, k in keys]
    )
    norm_sq = np.array([float(m.norm_sq) for m in modes])

    pairs = [(ia, ib) for ia in range(len(keys)) for ib in range(ia, len(keys))]
    workers = worker_count()
    if workers > 1 and len(pairs) > 4096:
        chunks = [pairs[i::workers] for i in range(workers)]
        args = [(domain.lengths, domain.nu, cutoff, keys, chunk) for chunk in chunks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_pair_entries, args))
        entries = [e for chunk in results for e in chunk]
    else:
        entries = _pair_entries((domain.lengths, domain.nu, cutoff, keys, pairs))
    entries.sort()
    c_idx = np.array([e[0] for e in entries], dtype=np.int32)
    a_idx = np.array([e[1] for e in entries], dtype=np.int32)
    b_idx = np.array([e[2] for e in entries], dtype=np.int32)
    val = np.array([e[3] for e in entries])

    h = np.zeros(len(keys))
    if h_spec is not None:
        for key, c in h_spec.items():
            h[keys.index(key)] = float(c)

    g1, _ = f_l_step(seed_set(domain), seed_set(domain), cutoff, domain, certify=False)
    control_idx = np.array(
        sorted(keys.index(key) for key in g1.members if key in set(keys)), dtype=np.int64
    )
    return GalerkinSystem(
        domain=domain, cutoff=cutoff, keys=keys, lam=lam, norm_sq=norm_sq,
        c_idx=c_idx, a_idx=a_idx, b_idx=b_idx, val=val, h=h, control_idx=control_idx,
    )


def quadratic(sys: GalerkinSystem, u: np.ndarray) -> np.ndarray:
    """B(u,u) in mode coordinates."""
    return _kernels.quad_apply(sys.c_idx, sys.a_idx, sys.b_idx, sys.val, u, sys.n_modes)


def quadratic_jact(sys: GalerkinSystem, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Transpose Jacobian of u -> B(u,u) at u, applied to v."""
    return _kernels.quad_jact(sys.c_idx, sys.a_idx, sys.b_idx, sys.val, u, v, sys.n_modes)


def rhs(sys: GalerkinSystem, u: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """du/dt = -Lambda u - B(u,u) - h + eta."""
    return -sys.lam * u - quadratic(sys, u) - sys.h + eta


def l2_energy(sys: GalerkinSystem, u: np.ndarray) -> float:
    return float(np.dot(sys.norm_sq, u * u))


def v_norm(sys: GalerkinSystem, u: np.ndarray) -> float:
    """Dissipation-weighted norm sqrt(sum (lambda_c/nu) |Y_c|^2 u_c^2)."""
    return math.sqrt(float(np.dot(sys.v_weights, u * u)))


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise-constant control: durations and per-segment values on the
    control branches (zero everywhere else by construction)."""

    durations: tuple
    values: np.ndarray  # (n_segments, n_control)

    def __post_init__(self):
        if len(self.durations) != len(self.values):
            raise ValueError("one value row per segment required")
        if any(d <= 0 for d in self.durations):
            raise ValueError("segment durations must be positive")

    @property
    def horizon(self) -> float:
        return float(sum(self.durations))

    @classmethod
    def zeros(cls, horizon: float, n_segments: int, n_control: int) -> "ControlSchedule":
        return cls(
            durations=tuple([horizon / n_segments] * n_segments),
            values=np.zeros((n_segments, n_control)),
        )


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, n_modes)


def _segment_steps(durations, dt):
    """Per-segment list of step sizes: full dt steps plus an exact remainder."""
    plan = []
    for d in durations:
        n_full = int(d / dt + 1e-9)
        rem = d - n_full * dt
        steps = [dt] * n_full
        if rem > 1e-12 * dt:
            steps.append(rem)
        plan.append(steps)
    return plan


def _check_dt(sys, dt, durations):
    lam_max = float(np.max(sys.lam)) if len(sys.lam) else 1.0
    cap = min(0.1 / lam_max, min(durations))
    if dt <= 0 or dt > cap * (1 + 1e-12):
        raise ValueError(f"dt={dt} violates dt <= min(0.1/lambda_max, segment) = {cap:.3e}")


def _eta_full(sys, schedule, seg):
    eta = np.zeros(sys.n_modes)
    eta[sys.control_idx] = schedule.values[seg]
    return eta


def _rk4_step(sys, u, eta, h):
    k1 = rhs(sys, u, eta)
    a2 = u + 0.5 * h * k1
    k2 = rhs(sys, a2, eta)
    a3 = u + 0.5 * h * k2
    k3 = rhs(sys, a3, eta)
    a4 = u + h * k3
    k4 = rhs(sys, a4, eta)
    return u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), (u, a2, a3, a4)


def integrate(sys: GalerkinSystem, u0, schedule: ControlSchedule, dt: float) -> Trajectory:
    """Classical fixed-step RK4 hitting segment boundaries exactly."""
    _check_dt(sys, dt, schedule.durations)
    u = np.array(u0, dtype=float)
    times = [0.0]
    states = [u.copy()]
    t = 0.0
    for seg, steps in enumerate(_segment_steps(schedule.durations, dt)):
        eta = _eta_full(sys, schedule, seg)
        for h in steps:
            u, _ = _rk4_step(sys, u, eta, h)
            if not np.all(np.isfinite(u)):
                raise FloatingPointError(
                    f"state blew up near t={t + h:.6g} (max |u| -> inf); reduce dt or the forcing"
                )
            t += h
            times.append(t)
            states.append(u.copy())
    return Trajectory(times=np.array(times), states=np.array(states))


def _forward_tape(sys, u0, schedule, dt):
    u = np.array(u0, dtype=float)
    tape = []
    for seg, steps in enumerate(_segment_steps(schedule.durations, dt)):
        eta = _eta_full(sys, schedule, seg)
        for h in steps:
            u, stages = _rk4_step(sys, u, eta, h)
            tape.append((seg, h, stages))
            if not np.all(np.isfinite(u)):
                raise FloatingPointError("state blew up during forward sweep")
    return u, tape


def _fprime_t(sys, u, v):
    return -sys.lam * v - quadratic_jact(sys, u, v)


def objective_and_gradient(sys, u0, schedule, target, dt):
    """Final-time squared V-distance and its exact discrete gradient with
    respect to the per-segment control values (adjoint of the RK4 tape)."""
    uT, tape = _forward_tape(sys, u0, schedule, dt)
    diff = uT - target
    w = sys.v_weights
    J = float(np.dot(w, diff * diff))
    lam_adj = 2.0 * w * diff
    grad = np.zeros_like(schedule.values)
    ctrl = sys.control_idx
    for seg, h, (u_n, a2, a3, a4) in reversed(tape):
        dk1 = h / 6.0 * lam_adj
        dk2 = h / 3.0 * lam_adj
        dk3 = h / 3.0 * lam_adj
        dk4 = h / 6.0 * lam_adj
        du = lam_adj.copy()
        da4 = _fprime_t(sys, a4, dk4)
        du += da4
        dk3 = dk3 + h * da4
        da3 = _fprime_t(sys, a3, dk3)
        du += da3
        dk2 = dk2 + 0.5 * h * da3
        da2 = _fprime_t(sys, a2, dk2)
        du += da2
        dk1 = dk1 + 0.5 * h * da2
        du += _fprime_t(sys, u_n, dk1)
        deta = dk1 + dk2 + dk3 + dk4
        grad[seg] += deta[ctrl]
        lam_adj = du
    return J, grad


def objective(sys, u0, schedule, target, dt) -> float:
    uT, _ = _forward_tape(sys, u0, schedule, dt)
    diff = uT - target
    return float(np.dot(sys.v_weights, diff * diff))


@dataclass
class SteerResult:
    schedule: ControlSchedule
    distance: float
    iterations: int
    stagnated: bool
    history: list  # (iteration, J, step size)


def steer(
    sys: GalerkinSystem,
    u0,
    target,
    horizon: float,
    n_segments: int,
    max_iters: int,
    dt: float = 1e-3,
    distance_goal: float = 0.0,
    control_idx: np.ndarray | None = None,
    stagnation_window: int = 20,
    seed: int | None = None,
    init_scale: float = 1e-2,
) -> SteerResult:
    """Gradient descent on the final-time V-distance over piecewise-constant
    controls.

    The initial schedule is zero, or seeded Gaussian values of size
    init_scale when a seed is given (the zero schedule is a stationary
    point whenever the target has no component on the control branches,
    so reaching such targets needs the symmetry broken).  Stops early when
    the V-distance reaches distance_goal or when no accepted step improves
    the objective for stagnation_window consecutive iterations (returning
    the best schedule seen, flagged as stagnated).  control_idx restricts
    the actuated branches further; it must be a subset of the system
    control set.
    """
    if horizon <= 0 or n_segments < 1:
        raise ValueError("need a positive horizon and at least one segment")
    work_sys = sys
    if control_idx is not None:
        control_idx = np.asarray(sorted(control_idx), dtype=np.int64)
        if not set(control_idx.tolist()) <= set(sys.control_idx.tolist()):
            raise ValueError("restricted control set must lie inside the system control set")
        work_sys = GalerkinSystem(
            domain=sys.domain, cutoff=sys.cutoff, keys=sys.keys, lam=sys.lam,
            norm_sq=sys.norm_sq, c_idx=sys.c_idx, a_idx=sys.a_idx, b_idx=sys.b_idx,
            val=sys.val, h=sys.h, control_idx=control_idx,
        )
    target = np.asarray(target, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    schedule = ControlSchedule.zeros(horizon, n_segments, len(work_sys.control_idx))
    if seed is not None:
        rng = np.random.default_rng(seed)
        schedule = ControlSchedule(
            schedule.durations, init_scale * rng.standard_normal(schedule.values.shape)
        )
    J, grad = objective_and_gradient(work_sys, u0, schedule, target, dt)
    best_J, best_values = J, schedule.values.copy()
    step = 1.0
    history = []
    recent = [J]  # nonmonotone Armijo reference window
    no_improvement = 0
    iters_done = 0
    prev_values = prev_grad = None
    for it in range(1, max_iters + 1):
        iters_done = it
        gnorm_sq = float(np.sum(grad * grad))
        if gnorm_sq == 0.0:
            break
        if prev_grad is not None:
            # Barzilai-Borwein trial step, safeguarded by the line search
            dx = schedule.values - prev_values
            dg = grad - prev_grad
            denom = float(np.sum(dx * dg))
            if denom > 0:
                step = min(max(float(np.sum(dx * dx)) / denom, 1e-12), 1e6)
        J_ref = max(recent)
        accepted = False
        while step > 1e-18:
            trial = ControlSchedule(schedule.durations, schedule.values - step * grad)
            J_trial = objective(work_sys, u0, trial, target, dt)
            if J_trial <= J_ref - 1e-4 * step * gnorm_sq:
                accepted = True
                break
            step *= 0.5
        if accepted:
            improvement = J - J_trial
            prev_values, prev_grad = schedule.values, grad
            schedule = trial
            J, grad = objective_and_gradient(work_sys, u0, schedule, target, dt)
            recent.append(J)
            del recent[:-10]
            if J < best_J:
                best_J, best_values = J, schedule.values.copy()
            no_improvement = 0 if improvement > 1e-14 * max(J, 1e-300) else no_improvement + 1
        else:
            no_improvement += 1
        history.append((it, J, step))
        if math.sqrt(best_J) <= distance_goal:
            break
        if no_improvement >= stagnation_window:
            break
    best = ControlSchedule(schedule.durations, best_values)
    return SteerResult(
        schedule=best,
        distance=math.sqrt(best_J),
        iterations=iters_done,
        stagnated=no_improvement >= stagnation_window,
        history=history,
    )

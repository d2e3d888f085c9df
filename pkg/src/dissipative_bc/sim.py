"""Fixed-step simulation of plant/controller loops, expert data and costs.

Every controller here has the form ``u = r_hat - Kx x - Kc xhat`` acting
on the plant input, while an observer ``dxhat = Ahat xhat + Bhat (y + r)``
runs alongside.  The LQR expert is ``Kx = K, Kc = 0``; a learned observer
controller is ``Kx = 0, Kc = Chat``.  Noise ``r_hat`` (plant input) and
``r`` (observer input) is zero-order held over each sample period.

Batches of trajectories are integrated together.  For LTI plants the RK4
step is affine in the state, so it is applied as a precomputed matrix.
"""
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .learner import Dataset
from .numerics import is_hurwitz, solve_care
from .systems import NonlinearSubsystem, StateSpace

DIVERGENCE_THRESHOLD = 1e6


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    duration: float = 10.0
    sample_period: float = 0.01
    noise_std_controller: float = 0.25
    noise_std_plant: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0 or self.duration <= 0 or self.sample_period <= 0:
            raise ValueError("dt, duration and sample_period must be positive")
        if self.sample_period < self.dt or self.duration < self.sample_period:
            raise ValueError("need dt <= sample_period <= duration")
        if self.noise_std_controller < 0 or self.noise_std_plant < 0:
            raise ValueError("noise levels must be nonnegative")
        _ratio(self.sample_period, self.dt, "sample_period / dt")
        _ratio(self.duration, self.sample_period, "duration / sample_period")

    @property
    def substeps(self):
        return _ratio(self.sample_period, self.dt, "")

    @property
    def n_samples(self):
        return _ratio(self.duration, self.sample_period, "")


def _ratio(a, b, what):
    k = int(round(a / b))
    if k < 1 or abs(k * b - a) > 1e-9 * a:
        raise ValueError(f"{what} must be an integer")
    return k


@dataclass(frozen=True)
class LQRWeights:
    E1: object = 10.0
    F1: object = 0.1
    E2: object = 0.5
    F2: object = 0.1


def _weight(w, k, name):
    W = np.asarray(w, dtype=float)
    W = W * np.eye(k) if W.ndim == 0 else np.atleast_2d(W)
    if W.shape != (k, k):
        raise ValueError(f"{name} has shape {W.shape}, expected {(k, k)}")
    if np.any(np.linalg.eigvalsh(0.5 * (W + W.T)) <= 0):
        raise ValueError(f"{name} must be positive definite")
    return W


def design_expert(true_sys: StateSpace, weights: LQRWeights = LQRWeights()):
    """LQR gain ``K = E1^{-1} B' Pi1`` with state weight ``C' F1 C``."""
    E1 = _weight(weights.E1, true_sys.m, "E1")
    F1 = _weight(weights.F1, true_sys.p, "F1")
    Pi1 = solve_care(true_sys.A, true_sys.B, E1, true_sys.C.T @ F1 @ true_sys.C)
    return np.linalg.solve(E1, true_sys.B.T @ Pi1)


def design_observer(nominal_sys: StateSpace, weights: LQRWeights = LQRWeights()):
    """Steady-state Kalman-style observer of the autonomous nominal plant.

    Returns ``(Ahat, Bhat) = (A - L C, L)`` with ``L = Pi2 C' E2^{-1}`` and
    ``Pi2`` the stabilizing solution of the dual Riccati equation.
    """
    E2 = _weight(weights.E2, nominal_sys.p, "E2")
    F2 = _weight(weights.F2, nominal_sys.m, "F2")
    A, B, C = nominal_sys.A, nominal_sys.B, nominal_sys.C
    Pi2 = solve_care(A.T, C.T, E2, B @ F2 @ B.T)
    L = Pi2 @ C.T @ np.linalg.inv(E2)
    return A - L @ C, L


# -- policies and noise -------------------------------------------------------

@dataclass(frozen=True)
class Policy:
    """``u = r_hat - Kx x - Kc xhat`` with the observer ``(Ahat, Bhat)`` running."""

    Ahat: np.ndarray
    Bhat: np.ndarray
    Kx: np.ndarray
    Kc: np.ndarray

    @staticmethod
    def expert(K, Ahat, Bhat):
        K = np.atleast_2d(K)
        return Policy(np.atleast_2d(Ahat), np.atleast_2d(Bhat), K,
                      np.zeros((K.shape[0], np.atleast_2d(Ahat).shape[0])))

    @staticmethod
    def observer_feedback(Ahat, Bhat, Chat, n_plant):
        Chat = np.atleast_2d(Chat)
        return Policy(np.atleast_2d(Ahat), np.atleast_2d(Bhat),
                      np.zeros((Chat.shape[0], n_plant)), Chat)

    @staticmethod
    def from_controller(controller: StateSpace, n_plant):
        if np.any(controller.D):
            raise ValueError("controller must be strictly proper")
        return Policy.observer_feedback(controller.A, controller.B, controller.C, n_plant)


@dataclass(frozen=True)
class Noise:
    """Held noise samples: ``plant`` is ``(batch, n_samples, m)``,
    ``controller`` is ``(batch, n_samples, p)``."""

    plant: np.ndarray
    controller: np.ndarray


def draw_noise(rng, batch, n_samples, m, p, std_plant, std_controller):
    rng = np.random.default_rng(rng)
    plant = std_plant * rng.standard_normal((batch, n_samples, m))
    ctrl = std_controller * rng.standard_normal((batch, n_samples, p))
    return Noise(plant, ctrl)


def gaussian_init(std):
    def draw(rng, batch, n):
        return std * rng.standard_normal((batch, n))
    return draw


def ball_init(radius):
    """Uniform in the Euclidean ball of the given radius."""
    def draw(rng, batch, n):
        d = rng.standard_normal((batch, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return radius * d * rng.uniform(size=(batch, 1)) ** (1.0 / n)
    return draw


def zero_init(rng, batch, n):
    return np.zeros((batch, n))


# -- integration --------------------------------------------------------------

@dataclass
class Trajectory:
    """Samples on the ``sample_period`` grid.

    An unbounded trajectory is truncated before its first sample whose
    state norm exceeds the divergence threshold (or is not finite).
    """

    times: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    u: np.ndarray
    bounded: bool

    def __len__(self):
        return self.times.size


def rk4_step(f, x, t, h):
    k1 = f(x, t)
    k2 = f(x + 0.5 * h * k1, t + 0.5 * h)
    k3 = f(x + 0.5 * h * k2, t + 0.5 * h)
    k4 = f(x + h * k3, t + h)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_integrate(f, x0, t0, t1, dt):
    """Integrate ``dx/dt = f(x, t)`` from ``t0`` to ``t1`` with classical RK4."""
    steps = _ratio(t1 - t0, dt, "(t1 - t0) / dt")
    x = np.asarray(x0, dtype=float)
    for k in range(steps):
        x = rk4_step(f, x, t0 + k * dt, dt)
    return x


def _rk4_affine(Acl, Bcl, h, substeps):
    """Exact RK4 map ``z -> Phi z + Gam w`` for ``dz = Acl z + Bcl w``, w held."""
    n = Acl.shape[0]
    hA = h * Acl
    I = np.eye(n)
    phi = I + hA @ (I + hA @ (I / 2 + hA @ (I / 6 + hA / 24)))
    gam = h * (I + hA @ (I / 2 + hA @ (I / 6 + hA / 24))) @ Bcl
    Phi, Gam = I, np.zeros_like(Bcl)
    for _ in range(substeps):
        Phi, Gam = phi @ Phi, phi @ Gam + gam
    return Phi, Gam


def _check(plant, policy):
    n = plant.n
    m = plant.B.shape[1] if isinstance(plant, StateSpace) else plant.m
    p = plant.C.shape[0] if isinstance(plant, StateSpace) else plant.p
    if policy.Kx.shape != (m, n) or policy.Kc.shape != (m, policy.Ahat.shape[0]) \
            or policy.Bhat.shape != (policy.Ahat.shape[0], p):
        raise ValueError("plant and controller dimensions do not conform")
    return n, m, p


def simulate_batch(plant: Union[StateSpace, NonlinearSubsystem], policy: Policy,
                   config: SimConfig, x0, xhat0, noise: Optional[Noise] = None):
    """Simulate a batch of closed loops; returns a list of :class:`Trajectory`.

    ``x0`` and ``xhat0`` are ``(batch, n)`` and ``(batch, nhat)``.  Without
    ``noise`` the loop is noise-free.
    """
    n, m, p = _check(plant, policy)
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    xhat0 = np.atleast_2d(np.asarray(xhat0, dtype=float))
    batch, nh, N = x0.shape[0], policy.Ahat.shape[0], config.n_samples
    if x0.shape != (batch, n) or xhat0.shape != (batch, nh):
        raise ValueError("initial conditions do not match plant/observer orders")
    if noise is None:
        noise = Noise(np.zeros((batch, N, m)), np.zeros((batch, N, p)))
    if noise.plant.shape != (batch, N, m) or noise.controller.shape != (batch, N, p):
        raise ValueError("noise arrays do not match batch/sample counts")
    Ah, Bh, Kx, Kc = policy.Ahat, policy.Bhat, policy.Kx, policy.Kc

    Z = np.empty((batch, N + 1, n + nh))
    Z[:, 0] = np.hstack([x0, xhat0])
    alive = np.ones(batch, dtype=bool)
    end = np.full(batch, N + 1)

    if isinstance(plant, StateSpace):
        A, B, C, D = plant.A, plant.B, plant.C, plant.D
        Acl = np.block([[A - B @ Kx, -B @ Kc], [Bh @ (C - D @ Kx), Ah - Bh @ D @ Kc]])
        Bcl = np.block([[B, np.zeros((n, p))], [Bh @ D, Bh]])
        Phi, Gam = _rk4_affine(Acl, Bcl, config.dt, config.substeps)

        def advance(z, w, t):
            return z @ Phi.T + w @ Gam.T
    else:
        h, s = config.dt, config.substeps

        def advance(z, w, t):
            rh, r = w[:, :m], w[:, m:]

            def f(zz, tt):
                x, xh = zz[:, :n], zz[:, n:]
                u = rh - x @ Kx.T - xh @ Kc.T
                y = plant.output(x, u)
                return np.hstack([plant.rhs(x, u, tt), xh @ Ah.T + (y + r) @ Bh.T])

            for j in range(s):
                z = rk4_step(f, z, t + j * h, h)
            return z

    W = np.concatenate([noise.plant, noise.controller], axis=2)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(N):
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            z = advance(Z[idx, k], W[idx, k], k * config.sample_period)
            Z[idx, k + 1] = z
            bad = ~np.all(np.isfinite(z), axis=1)
            bad |= ~(np.linalg.norm(np.where(np.isfinite(z), z, 0.0), axis=1)
                     <= DIVERGENCE_THRESHOLD)
            end[idx[bad]] = k + 1
            alive[idx[bad]] = False

    times = np.arange(N + 1) * config.sample_period
    # hold the last noise sample for the final point
    Wu = np.concatenate([noise.plant, noise.plant[:, -1:]], axis=1)
    out = []
    for b in range(batch):
        e = end[b]
        x, xh = Z[b, :e, :n], Z[b, :e, n:]
        u = Wu[b, :e] - x @ Kx.T - xh @ Kc.T
        out.append(Trajectory(times[:e], x.copy(), xh.copy(), u, bool(alive[b])))
    return out


def simulate_closed_loop(plant, controller, config: SimConfig, x0, xhat0,
                         noise: Optional[Noise] = None):
    """Single closed loop of ``plant`` with an observer controller or policy.

    ``controller`` is a strictly proper :class:`StateSpace` ``(Ahat, Bhat,
    Chat, 0)`` in negative feedback, or a :class:`Policy`.  ``noise`` holds
    one trajectory's samples, shaped ``(n_samples, m)`` and ``(n_samples, p)``.
    """
    policy = controller if isinstance(controller, Policy) else \
        Policy.from_controller(controller, plant.n)
    if noise is not None:
        noise = Noise(noise.plant[None], noise.controller[None])
    return simulate_batch(plant, policy, config, np.asarray(x0)[None],
                          np.asarray(xhat0)[None], noise)[0]


def generate_expert_data(true_plant, K, observer, config: SimConfig, n_trajectories,
                         init_dist: Callable = gaussian_init(1.0),
                         xhat_init: Callable = zero_init, rng=None):
    """Roll out the noisy expert and collect ``(xhat, target)`` pairs.

    Targets are the negated plant inputs ``K x - e``, because a learned
    feedback ``Chat`` acts through ``u = r_hat - Chat xhat``; fitting
    ``Chat xhat ~ -u`` therefore imitates the expert.  One pair is taken at
    the start of every sample period.  Diverged rollouts are dropped with a
    warning.
    """
    Ahat, Bhat = observer
    rng = np.random.default_rng(config.seed if rng is None else rng)
    policy = Policy.expert(K, Ahat, Bhat)
    n, m, p = _check(true_plant, policy)
    x0 = init_dist(rng, n_trajectories, n)
    xh0 = xhat_init(rng, n_trajectories, np.atleast_2d(Ahat).shape[0])
    noise = draw_noise(rng, n_trajectories, config.n_samples, m, p,
                       config.noise_std_plant, config.noise_std_controller)
    return dataset_from_rollouts(simulate_batch(true_plant, policy, config, x0, xh0, noise))


def dataset_from_rollouts(trajs):
    """Pairs ``(xhat_k, -u_k)`` from expert rollouts, skipping diverged ones."""
    keep = [t for t in trajs if t.bounded]
    if len(keep) < len(trajs):
        warnings.warn(f"{len(trajs) - len(keep)} expert rollouts diverged and were dropped",
                      stacklevel=3)
    if not keep:
        raise RuntimeError("every expert rollout diverged")
    return Dataset(np.vstack([t.xhat[:-1] for t in keep]),
                   -np.vstack([t.u[:-1] for t in keep]))


def evaluation_cost(expert_traj: Trajectory, learned_traj: Trajectory):
    """Mean squared state deviation over the sample grid; ``inf`` if unbounded."""
    if not expert_traj.bounded:
        raise ValueError("expert trajectory is unbounded")
    if not learned_traj.bounded:
        return np.inf
    if expert_traj.times.shape != learned_traj.times.shape or \
            not np.array_equal(expert_traj.times, learned_traj.times):
        raise ValueError("trajectories are on different time grids")
    d = expert_traj.x - learned_traj.x
    return float(np.mean(np.sum(d ** 2, axis=1)))


def expert_is_stabilizing(true_sys: StateSpace, K):
    return is_hurwitz(true_sys.A - true_sys.B @ np.atleast_2d(K))

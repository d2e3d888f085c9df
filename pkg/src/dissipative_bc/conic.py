"""Small dense semidefinite programs and a barrier interior-point solver.

A :class:`ConicProgram` is::

    minimize    c' x
    subject to  F0_j + sum_i x_i F_ij  >= 0     (PSD, one per block j)
                A_eq x = b_eq

The solver eliminates the equalities (null-space parametrization), drops
directions that no block or objective depends on, finds a strictly
feasible point with a margin problem when needed, and then follows the
central path of ``t c'x - sum_j log det F_j(x)`` with damped Newton steps.
It is meant for blocks of order <= ~40 and a few hundred variables.

:class:`Affine` is a tiny expression type used to write LMIs as block
matrices of decision variables instead of building coefficient stacks by
hand.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np
import scipy.linalg

from .errors import DimensionError


# -- program representation ---------------------------------------------------

@dataclass
class LMIBlock:
    """``F0 + sum_i x_i F[i] >= 0``; ``F`` has shape ``(num_vars, k, k)``."""

    F0: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        self.F0 = np.atleast_2d(np.asarray(self.F0, dtype=float))
        k = self.F0.shape[0]
        self.F = np.asarray(self.F, dtype=float).reshape(-1, k, k)
        if self.F0.shape != (k, k):
            raise DimensionError(f"block constant must be square, got {self.F0.shape}")
        sym_err = max(np.abs(self.F0 - self.F0.T).max(initial=0.0),
                      np.abs(self.F - self.F.transpose(0, 2, 1)).max(initial=0.0))
        if sym_err > 1e-10 * max(1.0, np.abs(self.F0).max(initial=0.0), np.abs(self.F).max(initial=0.0)):
            raise ValueError(f"block matrices are not symmetric (error {sym_err:.2e})")
        self.F0 = 0.5 * (self.F0 + self.F0.T)
        self.F = 0.5 * (self.F + self.F.transpose(0, 2, 1))

    @property
    def order(self):
        return self.F0.shape[0]

    def evaluate(self, x):
        return self.F0 + np.tensordot(np.asarray(x, dtype=float), self.F, axes=1)


@dataclass
class ConicProgram:
    c: np.ndarray
    blocks: List[LMIBlock]
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    c0: float = 0.0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        for j, b in enumerate(self.blocks):
            if b.F.shape[0] != n:
                raise DimensionError(f"block {j} has {b.F.shape[0]} coefficient matrices, "
                                     f"program has {n} variables")
        if self.A_eq is None:
            self.A_eq = np.zeros((0, n))
            self.b_eq = np.zeros(0)
        A = np.asarray(self.A_eq, dtype=float)
        self.b_eq = np.asarray(self.b_eq, dtype=float).ravel()
        self.A_eq = A.reshape(self.b_eq.size, n)
        if self.b_eq.size != self.A_eq.shape[0]:
            raise DimensionError("A_eq and b_eq disagree")

    @property
    def num_vars(self):
        return self.c.size

    def objective(self, x):
        return float(self.c @ x + self.c0)

    def min_eigenvalues(self, x):
        return [float(np.linalg.eigvalsh(b.evaluate(x))[0]) for b in self.blocks]

    def with_bounds(self, lower=None, upper=None):
        """Copy with elementwise variable bounds added as 1x1 blocks."""
        n = self.num_vars
        blocks = list(self.blocks)
        for bound, sign in ((lower, 1.0), (upper, -1.0)):
            if bound is None:
                continue
            bound = np.broadcast_to(np.asarray(bound, dtype=float), (n,))
            for i, v in enumerate(bound):
                if np.isfinite(v):
                    F = np.zeros((n, 1, 1))
                    F[i] = sign
                    blocks.append(LMIBlock([[-sign * v]], F))
        return ConicProgram(self.c, blocks, self.A_eq, self.b_eq, self.c0)


class Status(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITERATIONS = "max_iterations"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class SolveReport:
    status: Status
    x: np.ndarray
    objective_value: float
    iterations: int
    gap: float
    message: str = ""

    @property
    def ok(self):
        return self.status is Status.OPTIMAL


@dataclass(frozen=True)
class SolverConfig:
    gap_tol: float = 1e-9         # stop when the gap bound m/t is this relative to |c'x|
    # a stage that stalls after reaching this relative gap still counts as optimal
    acceptable_gap: float = 1e-6
    stage_max_iter: int = 150     # Newton steps per barrier stage
    newton_tol: float = 1e-8      # centering stops when decrement^2 / 2 below this
    mu_factor: float = 0.2        # barrier parameter reduction per outer step
    max_iter: int = 500           # total Newton steps, both phases
    armijo: float = 0.25
    backtrack: float = 0.5
    boundary_fraction: float = 0.99


# -- solver internals ---------------------------------------------------------

class _Reduced:
    """Program in coordinates ``x = x_p + N z`` with equalities and inert
    directions removed."""

    def __init__(self, prog: ConicProgram):
        n = prog.num_vars
        self.prog = prog
        A, b = prog.A_eq, prog.b_eq
        if A.shape[0]:
            x_p, *_ = np.linalg.lstsq(A, b, rcond=None)
            resid = np.linalg.norm(A @ x_p - b)
            self.eq_residual = resid / max(1.0, np.linalg.norm(b))
            U, s, Vt = np.linalg.svd(A)
            rank = int(np.sum(s > 1e-12 * max(1.0, s[0] if s.size else 0.0)))
            N = Vt[rank:].T
        else:
            x_p, N = np.zeros(n), np.eye(n)
            self.eq_residual = 0.0
        self.x_p = x_p
        c = N.T @ prog.c
        F0s = [blk.evaluate(x_p) for blk in prog.blocks]
        Fs = [np.tensordot(N.T, blk.F, axes=1) for blk in prog.blocks]
        # drop directions that change neither the objective nor any block
        if N.shape[1]:
            V = np.hstack([F.reshape(F.shape[0], -1) for F in Fs] + [c[:, None]]) \
                if Fs else c[:, None]
            U, s, Vt = np.linalg.svd(V, full_matrices=True)
            rank = int(np.sum(s > 1e-12 * max(1.0, s[0] if s.size else 0.0)))
            Rb = U[:, :rank]
        else:
            Rb = np.zeros((0, 0))
        self.N = N @ Rb
        self.c = Rb.T @ c
        self.F0s = F0s
        self.Fs = [np.tensordot(Rb.T, F, axes=1) for F in Fs]
        self.c0 = float(prog.c @ x_p + prog.c0)
        self.dim = self.c.size
        self.barrier_order = sum(F0.shape[0] for F0 in F0s)

    def x_of(self, z):
        return self.x_p + self.N @ z

    def z_of(self, x):
        return self.N.T @ (np.asarray(x, dtype=float) - self.x_p)

    def blocks_at(self, z):
        return [F0 + np.tensordot(z, F, axes=1) for F0, F in zip(self.F0s, self.Fs)]


def _chol(M):
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return None


def _scaled_coeffs(L, F):
    """Stack of ``L^{-1} F_i L^{-T}`` for the coefficient stack ``F``."""
    nv, k, _ = F.shape
    if nv == 0:
        return np.zeros((0, k, k))
    Y = scipy.linalg.solve_triangular(L, F.transpose(1, 0, 2).reshape(k, nv * k), lower=True)
    Y = Y.reshape(k, nv, k).transpose(2, 1, 0).reshape(k, nv * k)  # columns: (L^-1 F_i)^T
    G = scipy.linalg.solve_triangular(L, Y, lower=True).reshape(k, nv, k).transpose(1, 0, 2)
    return 0.5 * (G + G.transpose(0, 2, 1))


def _newton_system(blocks, Fs):
    """Gradient and Hessian of ``-sum log det`` plus per-block scaled stacks."""
    dim = Fs[0].shape[0] if Fs else 0
    g = np.zeros(dim)
    H = np.zeros((dim, dim))
    Gs = []
    for S, F in zip(blocks, Fs):
        L = _chol(S)
        if L is None:
            return None
        G = _scaled_coeffs(L, F)
        Gv = G.reshape(dim, -1)
        g -= np.trace(G, axis1=1, axis2=2)
        H += Gv @ Gv.T
        Gs.append(G)
    return g, H, Gs


def _solve_psd(H, rhs):
    try:
        cf = scipy.linalg.cho_factor(H, lower=True, check_finite=False)
        return scipy.linalg.cho_solve(cf, rhs, check_finite=False)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(H, rhs, rcond=1e-14)[0]


def _center(red: _Reduced, z, t, cfg, budget, stop=None):
    """Minimize ``t c'z - sum log det F(z)`` from the strictly feasible ``z``.

    Returns ``(z, newton_steps, converged, failure_message)``.
    """
    steps = 0
    while steps < budget:
        blocks = red.blocks_at(z)
        sysm = _newton_system(blocks, red.Fs)
        if sysm is None:
            return z, steps, False, "iterate left the PSD cone"
        g, H, Gs = sysm
        grad = t * red.c + g
        dz = _solve_psd(H, -grad)
        dec2 = float(-grad @ dz)
        if not np.isfinite(dec2):
            return z, steps, False, "non-finite Newton step"
        if dec2 / 2 <= cfg.newton_tol:
            return z, steps, True, ""
        # exact barrier change along dz from the eigenvalues of sum dz_i G_i
        lams = [np.linalg.eigvalsh(np.tensordot(dz, G, axes=1)) for G in Gs]
        lam_min = min((lm[0] for lm in lams if lm.size), default=0.0)
        alpha = 1.0 if lam_min >= 0 else min(1.0, -cfg.boundary_fraction / lam_min)
        slope = float(grad @ dz)
        lin = t * float(red.c @ dz)
        while True:
            ok = all(np.all(1 + alpha * lm > 0) for lm in lams)
            # the scaled test can pass where factorization fails near the boundary
            ok = ok and _strictly_feasible(red, z + alpha * dz)
            if ok:
                dphi = alpha * lin - sum(np.sum(np.log1p(alpha * lm)) for lm in lams)
                if dphi <= cfg.armijo * alpha * slope:
                    break
            alpha *= cfg.backtrack
            if alpha < 1e-14:
                # no descent possible at working precision; treat as centered
                return z, steps, dec2 < 1e-6, ""
        z = z + alpha * dz
        steps += 1
        if stop is not None and stop(z):
            return z, steps, True, ""
        if -dphi <= 64 * np.finfo(float).eps * max(1.0, abs(t * float(red.c @ z))):
            # progress below working precision: as centered as it gets
            return z, steps, True, ""
    return z, steps, False, "iteration cap reached"


def _barrier(red: _Reduced, z, cfg, budget, stop=None, t0=None):
    """Barrier path following from strictly feasible ``z``."""
    m = max(red.barrier_order, 1)
    if t0 is None:
        sysm = _newton_system(red.blocks_at(z), red.Fs)
        t0 = 1.0
        if sysm is not None and red.dim:
            g, H, _ = sysm
            Hc = _solve_psd(H, red.c)
            denom = float(red.c @ Hc)
            if denom > 0:
                t0 = float(np.clip(-(g @ Hc) / denom, 1e-6, 1e6))
    t = t0
    used = 0
    centered = None
    while True:
        z_new, k, converged, msg = _center(red, z, t, cfg,
                                           min(budget - used, cfg.stage_max_iter), stop)
        used += k
        if stop is not None and stop(z_new):
            return z_new, used, Status.OPTIMAL, 1.0 / t, ""
        if msg:
            if centered is not None and centered[1] <= cfg.acceptable_gap * _scale(red, z):
                return centered[0], used, Status.OPTIMAL, centered[1], ""
            status = Status.NUMERICAL_FAILURE
            if msg == "iteration cap reached":
                status = Status.MAX_ITERATIONS
            return z_new, used, status, m / t, msg
        z = z_new
        centered = (z, m / t)
        if red.dim == 0:
            return z, used, Status.OPTIMAL, 0.0, ""
        if m / t <= cfg.gap_tol * _scale(red, z):
            return z, used, Status.OPTIMAL, m / t, ""
        t /= cfg.mu_factor


def _scale(red, z):
    return max(1.0, abs(getattr(red, "c0", 0.0) + float(red.c @ z)))


def _strictly_feasible(red: _Reduced, z):
    return all(_chol(S) is not None for S in red.blocks_at(z))


def _phase_one(red: _Reduced, z0, cfg, budget):
    """Find ``z`` with every block PD by minimizing a shared shift ``s``."""
    k_total = red.barrier_order
    if k_total == 0:
        return z0, 0, True, 0.0
    shift = [np.eye(F0.shape[0])[None] for F0 in red.F0s]
    aug = _Reduced.__new__(_Reduced)
    aug.c = np.concatenate([np.zeros(red.dim), [1.0]])
    aug.F0s = red.F0s
    aug.Fs = [np.concatenate([F, I], axis=0) for F, I in zip(red.Fs, shift)]
    aug.dim = red.dim + 1
    aug.barrier_order = k_total
    lam = min(np.linalg.eigvalsh(S)[0] for S in red.blocks_at(z0))
    w = np.concatenate([z0, [max(0.0, -lam) + 1.0]])
    w, used, status, gap, msg = _barrier(aug, w, cfg, budget, stop=lambda v: v[-1] < 0)
    s = w[-1]
    return w[:-1], used, s < 0, s


def solve(prog: ConicProgram, config: SolverConfig = SolverConfig(), x0=None):
    """Minimize ``c'x`` over the blocks' PSD region.

    Never raises for infeasible or ill-posed programs; the outcome is in
    ``SolveReport.status``.
    """
    cfg = config
    red = _Reduced(prog)
    n = prog.num_vars
    if red.eq_residual > 1e-9:
        return SolveReport(Status.INFEASIBLE, red.x_p, np.nan, 0, np.inf,
                           f"equality constraints inconsistent (residual {red.eq_residual:.2e})")
    z = red.z_of(x0) if x0 is not None else np.zeros(red.dim)
    if _unbounded_direction(prog, red):
        return SolveReport(Status.UNBOUNDED, red.x_p, -np.inf, 0, np.inf,
                           "objective decreases along a direction no block constrains")
    used = 0
    if not _strictly_feasible(red, z):
        z, used, found, s = _phase_one(red, z, cfg, cfg.max_iter)
        if not found:
            x = red.x_of(z)
            return SolveReport(Status.INFEASIBLE, x, np.nan, used, s,
                               f"no strictly feasible point (best shift {s:.3e})")
    z, k, status, gap, msg = _barrier(red, z, cfg, cfg.max_iter - used)
    used += k
    x = red.x_of(z)
    return SolveReport(status, x, float(prog.c @ x + prog.c0), used, gap, msg)


def _unbounded_direction(prog, red):
    """True when some equality-feasible direction moves the objective but no block."""
    A = prog.A_eq
    n = prog.num_vars
    if A.shape[0]:
        _, s, Vt = np.linalg.svd(A)
        rank = int(np.sum(s > 1e-12 * max(1.0, s[0] if s.size else 0.0)))
        N = Vt[rank:].T
    else:
        N = np.eye(n)
    if N.shape[1] == 0:
        return False
    V = np.hstack([np.tensordot(N.T, b.F, axes=1).reshape(N.shape[1], -1) for b in prog.blocks]) \
        if prog.blocks else np.zeros((N.shape[1], 0))
    if V.shape[1] == 0:
        inert = np.eye(N.shape[1])
    else:
        U, s, _ = np.linalg.svd(V, full_matrices=True)
        rank = int(np.sum(s > 1e-12 * max(1.0, s[0] if s.size else 0.0)))
        inert = U[:, rank:]
    cz = inert.T @ (N.T @ prog.c)
    return bool(cz.size and np.linalg.norm(cz) > 1e-12 * max(1.0, np.linalg.norm(prog.c)))


@dataclass
class FeasibilityReport:
    feasible: bool
    margin: float
    x: np.ndarray
    report: SolveReport


def feasibility(prog: ConicProgram, config: SolverConfig = SolverConfig(), x0=None,
                margin_cap=1.0, tol=0.0):
    """Maximize a margin ``t <= margin_cap`` with every block ``>= t I``.

    The program's own objective is ignored.  ``feasible`` is ``t* > tol``;
    ``x`` holds the original variables (the margin is dropped).
    """
    n = prog.num_vars
    blocks = []
    for b in prog.blocks:
        Ft = -np.eye(b.order)[None]
        blocks.append(LMIBlock(b.F0, np.concatenate([b.F, Ft], axis=0)))
    cap = np.zeros((n + 1, 1, 1))
    cap[-1] = -1.0
    blocks.append(LMIBlock([[margin_cap]], cap))
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_eq = np.hstack([prog.A_eq, np.zeros((prog.A_eq.shape[0], 1))])
    aug = ConicProgram(c, blocks, A_eq, prog.b_eq)
    red0 = _Reduced(aug)
    if red0.eq_residual > 1e-9:
        rep = SolveReport(Status.INFEASIBLE, red0.x_p, np.nan, 0, np.inf,
                          "equality constraints inconsistent")
        return FeasibilityReport(False, -np.inf, red0.x_p[:n], rep)
    # the margin problem is strictly feasible by construction
    x_start = red0.x_p.copy() if x0 is None else np.append(np.asarray(x0, dtype=float), 0.0)
    x_start[-1] = 0.0
    lam = min((np.linalg.eigvalsh(b.evaluate(x_start[:n]))[0] for b in prog.blocks),
              default=margin_cap)
    x_start[-1] = min(lam, margin_cap) - 1.0
    rep = solve(aug, config, x0=x_start)
    t = float(rep.x[-1])
    if rep.status is Status.UNBOUNDED:
        t = np.inf
    return FeasibilityReport(bool(t > tol), t, rep.x[:n], rep)


# -- affine matrix expressions ------------------------------------------------

class Affine:
    """Matrix-valued affine function of a growing decision vector.

    ``const + sum_i x_i coef[i]``.  Coefficient stacks are zero-padded on
    the fly when variables are added after an expression was built.
    """

    __array_priority__ = 100

    def __init__(self, const, coef=None):
        const = np.atleast_2d(np.asarray(const, dtype=float))
        if coef is None:
            coef = np.zeros((0,) + const.shape)
        self.const = const
        coef = np.asarray(coef, dtype=float)
        self.coef = coef if coef.ndim == 3 else coef.reshape((-1,) + const.shape)

    @property
    def shape(self):
        return self.const.shape

    @property
    def nvar(self):
        return self.coef.shape[0]

    def padded(self, n):
        if self.nvar >= n:
            return self.coef
        pad = np.zeros((n - self.nvar,) + self.shape)
        return np.concatenate([self.coef, pad], axis=0)

    @staticmethod
    def lift(x):
        return x if isinstance(x, Affine) else Affine(x)

    def __add__(self, other):
        other = Affine.lift(other)
        if other.shape != self.shape:
            raise DimensionError(f"cannot add shapes {self.shape} and {other.shape}")
        n = max(self.nvar, other.nvar)
        return Affine(self.const + other.const, self.padded(n) + other.padded(n))

    __radd__ = __add__

    def __neg__(self):
        return Affine(-self.const, -self.coef)

    def __sub__(self, other):
        return self + (-Affine.lift(other))

    def __rsub__(self, other):
        return Affine.lift(other) - self

    def __mul__(self, scalar):
        scalar = float(scalar)
        return Affine(scalar * self.const, scalar * self.coef)

    __rmul__ = __mul__

    def __matmul__(self, M):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return Affine(self.const @ M, self.coef @ M)

    def __rmatmul__(self, M):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return Affine(M @ self.const, np.einsum("ij,njk->nik", M, self.coef))

    @property
    def T(self):
        return Affine(self.const.T, self.coef.transpose(0, 2, 1))

    def trace(self):
        return Affine([[np.trace(self.const)]], np.trace(self.coef, axis1=1, axis2=2))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.const + np.tensordot(x[: self.nvar], self.coef, axes=1)

    @staticmethod
    def bmat(rows):
        """Block matrix from a nested list; ``None`` entries become zeros."""
        heights = []
        for row in rows:
            h = {Affine.lift(b).shape[0] for b in row if b is not None}
            if len(h) != 1:
                raise DimensionError("inconsistent block heights")
            heights.append(h.pop())
        widths = []
        for col in zip(*rows):
            w = {Affine.lift(b).shape[1] for b in col if b is not None}
            if len(w) != 1:
                raise DimensionError("inconsistent block widths")
            widths.append(w.pop())
        blocks = [[Affine.lift(b) if b is not None else Affine(np.zeros((h, w)))
                   for b, w in zip(row, widths)] for row, h in zip(rows, heights)]
        n = max(b.nvar for row in blocks for b in row)
        const = np.block([[b.const for b in row] for row in blocks])
        coef = np.concatenate([np.concatenate([b.padded(n) for b in row], axis=2)
                               for row in blocks], axis=1)
        return Affine(const, coef)


class ProgramBuilder:
    """Collect variables, PSD constraints and equalities into a ConicProgram."""

    def __init__(self):
        self.nvar = 0
        self._psd: List[Affine] = []
        self._eq: List[Affine] = []
        self.objective: Optional[Affine] = None

    def _new(self, count):
        start = self.nvar
        self.nvar += count
        return start

    def scalar(self):
        i = self._new(1)
        coef = np.zeros((self.nvar, 1, 1))
        coef[i] = 1.0
        return Affine(np.zeros((1, 1)), coef)

    def matrix(self, rows, cols):
        i = self._new(rows * cols)
        coef = np.zeros((self.nvar, rows, cols))
        for r in range(rows):
            for c in range(cols):
                coef[i + r * cols + c, r, c] = 1.0
        return Affine(np.zeros((rows, cols)), coef)

    def symmetric(self, n):
        i = self._new(n * (n + 1) // 2)
        coef = np.zeros((self.nvar, n, n))
        for r in range(n):
            for c in range(r, n):
                coef[i, r, c] = coef[i, c, r] = 1.0
                i += 1
        return Affine(np.zeros((n, n)), coef)

    def psd(self, expr: Affine):
        """Require ``expr >= 0`` (expr must be symmetric)."""
        self._psd.append(expr)

    def nsd(self, expr: Affine):
        self._psd.append(-expr)

    def equal(self, expr: Affine, value=0.0):
        self._eq.append(Affine.lift(expr) - np.broadcast_to(value, Affine.lift(expr).shape))

    def minimize(self, expr: Affine):
        self.objective = Affine.lift(expr)

    def build(self) -> ConicProgram:
        n = self.nvar
        blocks = [LMIBlock(e.const, e.padded(n)) for e in self._psd]
        if self._eq:
            rows = [e.padded(n).reshape(n, -1).T for e in self._eq]
            consts = [e.const.ravel() for e in self._eq]
            A_eq = np.vstack(rows)
            b_eq = -np.concatenate(consts)
        else:
            A_eq, b_eq = np.zeros((0, n)), np.zeros(0)
        if self.objective is None:
            c, c0 = np.zeros(n), 0.0
        else:
            c, c0 = self.objective.padded(n).ravel(), float(self.objective.const.ravel()[0])
        return ConicProgram(c, blocks, A_eq, b_eq, c0)


# -- debug dump ---------------------------------------------------------------

def dump_program(prog: ConicProgram, path):
    """Write a program as sparse text for cross-checking with other solvers.

    Format: ``#`` comment lines, then ``vars <n>``, ``blocks <k1> <k2> ...``,
    one ``c <i> <value>`` line per nonzero objective entry, and one line
    ``<block> <var> <row> <col> <value>`` per nonzero upper-triangular entry
    (1-based indices; ``var = 0`` is the constant ``F0``). Equalities are
    ``eq <row> <var> <value>`` and ``beq <row> <value>``.
    """
    lines = ["# block constraints: F0 + sum_i x_i F_i >= 0; minimize c'x",
             f"vars {prog.num_vars}",
             "blocks " + " ".join(str(b.order) for b in prog.blocks)]
    lines += [f"c {i + 1} {float(v)!r}" for i, v in enumerate(prog.c) if v != 0.0]
    for j, b in enumerate(prog.blocks, start=1):
        for v, M in enumerate([b.F0] + list(b.F)):
            r, c = np.nonzero(np.triu(M))
            lines += [f"{j} {v} {ri + 1} {ci + 1} {float(M[ri, ci])!r}" for ri, ci in zip(r, c)]
    for r, row in enumerate(prog.A_eq, start=1):
        lines += [f"eq {r} {i + 1} {float(v)!r}" for i, v in enumerate(row) if v != 0.0]
        lines.append(f"beq {r} {float(prog.b_eq[r - 1])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_program(path) -> ConicProgram:
    n, orders, c = 0, [], None
    entries, eq, beq = [], [], {}
    with open(path) as fh:
        for line in fh:
            tok = line.split()
            if not tok or tok[0].startswith("#"):
                continue
            if tok[0] == "vars":
                n = int(tok[1])
                c = np.zeros(n)
            elif tok[0] == "blocks":
                orders = [int(t) for t in tok[1:]]
            elif tok[0] == "c":
                c[int(tok[1]) - 1] = float(tok[2])
            elif tok[0] == "eq":
                eq.append((int(tok[1]) - 1, int(tok[2]) - 1, float(tok[3])))
            elif tok[0] == "beq":
                beq[int(tok[1]) - 1] = float(tok[2])
            else:
                entries.append((int(tok[0]) - 1, int(tok[1]), int(tok[2]) - 1,
                                int(tok[3]) - 1, float(tok[4])))
    mats = [np.zeros((n + 1, k, k)) for k in orders]
    for j, v, r, col, val in entries:
        mats[j][v, r, col] = mats[j][v, col, r] = val
    A_eq = np.zeros((len(beq), n))
    for r, i, val in eq:
        A_eq[r, i] = val
    b_eq = np.array([beq[r] for r in range(len(beq))])
    blocks = [LMIBlock(M[0], M[1:]) for M in mats]
    return ConicProgram(c, blocks, A_eq, b_eq)

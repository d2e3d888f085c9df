"""Dissipativity-constrained behavior cloning of an observer feedback matrix.

Given a fixed observer ``(Ahat, Bhat)`` and pairs ``(xhat_k, u_k)``, find
``Chat`` minimizing ``mean ||Chat xhat_k - u_k||^2 + eta tr(Chat Chat')``
such that ``(Ahat, Bhat, Chat, 0)`` satisfies a QSR dissipativity LMI.
The quadratic objective enters the SDP through an epigraph block
``[[W, Chat G^{1/2}], [*, I]] >= 0``; minimizing ``tr(W) - 2 tr(Chat h)``
then gives the least-squares objective up to a constant.
"""
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import conic
from .certificates import Certificate, _verify, feasible_controller, kyp_matrix, reduce_trailing
from .conic import Affine, ProgramBuilder
from .errors import InvalidCase, LearnerInfeasible
from .numerics import Definiteness, as_symmetric, definiteness, is_hurwitz, numerical_rank, \
    sqrtm_psd
from .systems import Passive, StateSpace, case_to_qsr

RECHECK_TOL = 1e-6


@dataclass(frozen=True)
class Dataset:
    """Rows of ``xhat`` are state estimates, rows of ``u`` the matching targets."""

    xhat: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.xhat, dtype=float))
        U = np.asarray(self.u, dtype=float)
        U = U.reshape(X.shape[0], -1)
        if X.shape[0] < 1:
            raise ValueError("dataset is empty")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(U))):
            raise ValueError("dataset has non-finite entries")
        object.__setattr__(self, "xhat", X)
        object.__setattr__(self, "u", U)

    def __len__(self):
        return self.xhat.shape[0]

    @staticmethod
    def concat(parts):
        parts = list(parts)
        return Dataset(np.vstack([p.xhat for p in parts]), np.vstack([p.u for p in parts]))


class LMIRoute(Enum):
    AUTO = "auto"
    EQ1 = "eq1"
    EQ2 = "eq2"
    EQ4 = "eq4"
    NONE = "none"      # no dissipativity constraint; same objective


@dataclass(frozen=True)
class LearnerConfig:
    eta: float = 0.05
    supply_case: object = Passive()
    lmi_route: LMIRoute = LMIRoute.AUTO
    p_floor: float = 1e-6
    # return the ridge solution untouched when it is already feasible
    try_unconstrained: bool = True
    solver: conic.SolverConfig = conic.SolverConfig()

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        object.__setattr__(self, "lmi_route", LMIRoute(self.lmi_route))


@dataclass
class LearnedController:
    Chat: np.ndarray
    certificate: Optional[Certificate]
    training_objective: float
    # None when the ridge solution was feasible and no SDP was solved
    solver_report: Optional[conic.SolveReport] = field(default=None, repr=False)


def objective(Chat, data: Dataset, eta):
    r = data.xhat @ np.atleast_2d(Chat).T - data.u
    return float(np.mean(np.sum(r ** 2, axis=1)) + eta * np.sum(np.asarray(Chat) ** 2))


def learn_unconstrained(data: Dataset, eta):
    """Ridge solution ``U X' (X X' + N eta I)^{-1}`` (samples as columns).

    With ``eta = 0`` and rank-deficient estimates the minimum-norm
    least-squares solution is returned and a warning issued.
    """
    X, U = data.xhat.T, data.u.T
    N = X.shape[1]
    G = X @ X.T + N * eta * np.eye(X.shape[0])
    if eta == 0 and numerical_rank(G, 1e-12) < G.shape[0]:
        warnings.warn("rank-deficient state estimates; returning minimum-norm solution",
                      stacklevel=2)
        return U @ np.linalg.pinv(X)
    return np.linalg.solve(G, X @ U.T).T


def resolve_route(route: LMIRoute, case, qsr):
    if route is not LMIRoute.AUTO:
        return route
    q = definiteness(qsr.Q).classification
    if q is Definiteness.ND:
        return LMIRoute.EQ4
    if not np.any(qsr.Q):
        return LMIRoute.EQ2
    raise InvalidCase("no convex LMI for a supply rate with Q neither zero nor negative definite")


def _diagnosis(Ahat, qsr):
    s = np.linalg.svd(qsr.S, compute_uv=False)
    return {
        "observer_hurwitz": is_hurwitz(Ahat),
        "S_full_rank": bool(s.size and s[-1] > 1e-10 * max(1.0, s[0])
                            and qsr.S.shape[0] >= qsr.S.shape[1]),
        "R_psd": definiteness(qsr.R).classification in (Definiteness.PD, Definiteness.PSD),
    }


def learn_constrained(Ahat, Bhat, data: Dataset, config: LearnerConfig = LearnerConfig()):
    """Solve the dissipativity-constrained behavior-cloning SDP.

    Raises :class:`LearnerInfeasible` carrying a diagnosis of the
    sufficient feasibility conditions when the SDP has no solution.
    """
    Ahat = np.atleast_2d(np.asarray(Ahat, dtype=float))
    n = Ahat.shape[0]
    Bhat = np.asarray(Bhat, dtype=float).reshape(n, -1)
    if data.xhat.shape[1] != n:
        raise ValueError(f"state estimates have dimension {data.xhat.shape[1]}, observer has {n}")
    m, p = data.u.shape[1], Bhat.shape[1]
    eta = config.eta
    qsr = case_to_qsr(config.supply_case, m, p)
    route = resolve_route(config.lmi_route, config.supply_case, qsr)
    if route is LMIRoute.EQ1 and not isinstance(config.supply_case, Passive):
        raise InvalidCase("eq1 only expresses passivity")
    if route is LMIRoute.EQ2 and np.any(qsr.Q):
        raise InvalidCase("eq2 is not convex in Chat unless Q = 0")
    if route is LMIRoute.EQ4 and definiteness(qsr.Q).classification is not Definiteness.ND:
        raise InvalidCase("eq4 requires Q negative definite")

    if route is not LMIRoute.NONE and config.try_unconstrained:
        shortcut = _certified_ridge(Ahat, Bhat, data, qsr, route, config)
        if shortcut is not None:
            return shortcut

    N = len(data)
    G = data.xhat.T @ data.xhat / N + eta * np.eye(n)
    if definiteness(G).classification is not Definiteness.PD:
        G = G + 1e-10 * np.eye(n)
    h = data.xhat.T @ data.u / N
    const = float(np.mean(np.sum(data.u ** 2, axis=1)))
    Gh = sqrtm_psd(G)

    b = ProgramBuilder()
    P = b.symmetric(n)
    Chat = b.matrix(m, n)
    W = b.symmetric(m)
    b.psd(Affine.bmat([[W, Chat @ Gh], [(Chat @ Gh).T, np.eye(n)]]))
    b.minimize(W.trace() - 2.0 * (Chat @ h).trace() + const)

    if route is not LMIRoute.NONE:
        X = P @ Ahat + Ahat.T @ P
        if route is LMIRoute.EQ1:
            Y, Z = P @ Bhat - Chat.T, np.zeros((p, p))
        elif route is LMIRoute.EQ2:
            Y, Z = P @ Bhat - Chat.T @ qsr.S, -qsr.R
        else:
            Y = Affine.bmat([[P @ Bhat - Chat.T @ qsr.S, Chat.T]])
            Z = np.block([[-qsr.R, np.zeros((p, m))], [np.zeros((m, p)), np.linalg.inv(qsr.Q)]])
        lmi, eq, worst = reduce_trailing(X, Y, Z)
        if worst > 1e-9 * max(1.0, np.linalg.norm(Z, "fro")):
            raise LearnerInfeasible("constant block of the LMI is not NSD (R must be PSD)",
                                    _diagnosis(Ahat, qsr))
        b.nsd(lmi)
        b.psd(P - config.p_floor * np.eye(n))
        if eq is not None:
            b.equal(eq)
    prog = b.build()
    x0 = _initial_point(Ahat, Bhat, qsr, route, data, G, config, b.nvar, n, m)
    rep = conic.solve(prog, config.solver, x0=x0)
    if rep.status is conic.Status.INFEASIBLE:
        raise LearnerInfeasible(f"dissipativity-constrained program infeasible: {rep.message}",
                                _diagnosis(Ahat, qsr))
    if rep.status is not conic.Status.OPTIMAL:
        warnings.warn(f"SDP solver stopped with status {rep.status.value}: {rep.message}",
                      stacklevel=2)
    C_val = Chat.value(rep.x)
    cert = None
    if route is not LMIRoute.NONE:
        P_val = as_symmetric(P.value(rep.x))
        cert = recheck(Ahat, Bhat, C_val, P_val, qsr, route)
        if cert.lmi_margin > RECHECK_TOL or definiteness(P_val).classification is not Definiteness.PD:
            raise LearnerInfeasible(f"learned controller failed independent recheck "
                                    f"(margin {cert.lmi_margin:.3e})", _diagnosis(Ahat, qsr))
    return LearnedController(C_val, cert, objective(C_val, data, eta), rep)


def _certified_ridge(Ahat, Bhat, data, qsr, route, config):
    """Return the ridge solution if it already satisfies the LMI.

    A feasible unconstrained minimizer is the constrained optimum, and
    taking it directly avoids interior-point round-off in that case.
    """
    n = Ahat.shape[0]
    X = data.xhat
    if config.eta == 0 and numerical_rank(X.T @ X, 1e-12) < n:
        return None
    Cu = learn_unconstrained(data, config.eta)
    ver = _verify(route.value, StateSpace(Ahat, Bhat, Cu), qsr, config.solver,
                  check_minimal=False)
    if not ver.feasible:
        return None
    cert = recheck(Ahat, Bhat, Cu, ver.certificate.P, qsr, route)
    if cert.lmi_margin > RECHECK_TOL or \
            definiteness(cert.P).classification is not Definiteness.PD:
        return None
    return LearnedController(Cu, cert, objective(Cu, data, config.eta), None)


def recheck(Ahat, Bhat, Chat, P, qsr, route: LMIRoute):
    """Reassemble the LMI with the returned ``(P, Chat)``; report its max eigenvalue."""
    ctrl = StateSpace(Ahat, Bhat, Chat)
    which = {LMIRoute.EQ1: "eq1", LMIRoute.EQ2: "eq2", LMIRoute.EQ4: "eq4"}[route]
    M = kyp_matrix(which, ctrl.A, ctrl.B, ctrl.C, ctrl.D, P, qsr)
    return Certificate(P, float(np.linalg.eigvalsh(M)[-1]), which)


def _initial_point(Ahat, Bhat, qsr, route, data, G, config, nvar, n, m):
    """Strictly feasible start from the constructive controller, when it applies."""
    if route is LMIRoute.NONE:
        C0 = np.zeros((m, n))
        P0 = np.eye(n)
    else:
        try:
            q = qsr if route is not LMIRoute.EQ1 else \
                type(qsr)(qsr.Q, np.eye(qsr.S.shape[0]), qsr.R)
            C0, cert = feasible_controller(Ahat, Bhat, q)
        except Exception:
            return None
        P0 = cert.P
        lo = np.linalg.eigvalsh(P0)[0]
        if lo <= 10 * config.p_floor:
            if np.any(qsr.Q):
                return None
            # Q = 0: the construction is homogeneous in P
            scale = 10 * config.p_floor / lo
            P0, C0 = scale * P0, scale * C0
    W0 = C0 @ G @ C0.T + np.eye(m)
    x = []
    x += [P0[r, c] for r in range(n) for c in range(r, n)]
    x += list(C0.ravel())
    x += [W0[r, c] for r in range(m) for c in range(r, m)]
    return np.array(x)

"""KYP-type dissipativity certificates and closed-loop QSR stability tests.

Three LMIs are supported, all in a storage matrix ``P > 0``:

* ``"eq1"``: passivity, ``[[PA + A'P, PB - C'], [*, -D - D']] <= 0``
* ``"eq2"``: QSR dissipativity,
  ``[[PA + A'P - C'QC, PB - C'(QD + S)], [*, -R - S'D - D'S - D'QD]] <= 0``
* ``"eq4"``: the Schur-complemented QSR form for ``Q < 0``,
  ``[[PA + A'P, PB - C'S, C'], [*, -R - S'D - D'S, D'], [*, *, Q^{-1}]] <= 0``

Feasibility is decided with a margin program that is homogeneous in
``(P, tau)``, where ``tau`` scales the supply-rate terms. Because the
property is invariant under scaling the supply rate, the normalization
``tr(P) + tau = 1`` loses nothing and keeps the program bounded. A
constant trailing block with a nontrivial null space (e.g. ``-D - D'`` for
a strictly proper system) forces the matching off-diagonal columns to
vanish; those are imposed as equalities so the remaining LMI can have an
interior.
"""
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import conic
from .conic import Affine, ProgramBuilder
from .errors import InfeasibleInput, InvalidCase, NoStabilizingQSR
from .numerics import as_symmetric, controllability_matrix, definiteness, is_hurwitz, \
    numerical_rank, solve_lyapunov, Definiteness
from .systems import QSRTriple, StateSpace

LMI_TOL = 1e-8
ROUTES = ("eq1", "eq2", "eq4")


@dataclass(frozen=True)
class Certificate:
    P: np.ndarray
    lmi_margin: float     # largest eigenvalue of the assembled LMI matrix
    which_lmi: str


@dataclass(frozen=True)
class Verification:
    feasible: bool
    certificate: Optional[Certificate]
    margin: float         # optimal margin of the normalized program
    message: str = ""

    def __bool__(self):
        return self.feasible


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    alpha: float
    margin: float


# -- numeric LMI assembly -----------------------------------------------------

def kyp_matrix(which, A, B, C, D, P, qsr: Optional[QSRTriple] = None):
    """Assemble one of the LMI matrices for a given ``P``."""
    A, B, C, D, P = (np.atleast_2d(np.asarray(v, dtype=float)) for v in (A, B, C, D, P))
    PA = P @ A + A.T @ P
    if which == "eq1":
        M = np.block([[PA, P @ B - C.T], [(P @ B - C.T).T, -D - D.T]])
    elif which == "eq2":
        Q, S, R = qsr.Q, qsr.S, qsr.R
        off = P @ B - C.T @ (Q @ D + S)
        M = np.block([[PA - C.T @ Q @ C, off],
                      [off.T, -R - S.T @ D - D.T @ S - D.T @ Q @ D]])
    elif which == "eq4":
        Q, S, R = qsr.Q, qsr.S, qsr.R
        off = P @ B - C.T @ S
        n, m, p = A.shape[0], B.shape[1], C.shape[0]
        M = np.block([[PA, off, C.T],
                      [off.T, -R - S.T @ D - D.T @ S, D.T],
                      [C, D, np.linalg.inv(Q)]])
    else:
        raise ValueError(f"unknown LMI {which!r}")
    return as_symmetric(M)


def lmi_margin(M):
    """Largest eigenvalue of ``M`` after scaling by ``max(1, ||M||_F)``."""
    M = as_symmetric(M)
    return float(np.linalg.eigvalsh(M)[-1] / max(1.0, np.linalg.norm(M, "fro")))


def _certify(which, sys, P, qsr, tol=LMI_TOL):
    """Recheck ``P`` on the assembled LMI without any rescaling.

    The LMIs are homogeneous in ``P`` up to the supply-rate terms, so a
    margin normalized by ``||M||`` hides real violations when ``P`` is
    huge.  The slack is ``tol`` times the size of the problem data plus
    the rounding incurred in forming ``P A`` and ``P B``.
    """
    P = as_symmetric(P)
    M = kyp_matrix(which, sys.A, sys.B, sys.C, sys.D, P, qsr)
    lam = float(np.linalg.eigvalsh(M)[-1])
    data = [sys.A, sys.B, sys.C, sys.D]
    if qsr is not None:
        data += [qsr.Q, qsr.S, qsr.R]
    scale = max([1.0] + [float(np.linalg.norm(X)) for X in data])
    ab = float(np.linalg.norm(np.hstack([sys.A, sys.B])))
    slack = tol * scale + 1e4 * np.finfo(float).eps * float(np.linalg.norm(P)) * (1.0 + ab)
    pd = definiteness(P).classification is Definiteness.PD
    return Certificate(P, lam, which), (pd and lam <= slack)


# -- margin programs ----------------------------------------------------------

def reduce_trailing(X: Affine, Y: Affine, Z, z_scale: Optional[Affine] = None, tol=None):
    """Split ``[[X, Y], [Y', s Z]] <= 0`` with constant ``Z`` into equalities
    and a smaller LMI.

    Returns ``(lmi, equality, worst)``: ``lmi`` is the reduced matrix that
    must be NSD, ``equality`` is ``Y @ V_null`` (must vanish, or ``None``),
    and ``worst`` is the largest eigenvalue of ``Z``; a clearly positive
    value means the LMI is infeasible outright.
    """
    Z = as_symmetric(Z)
    if tol is None:
        tol = 1e-9 * max(1.0, np.linalg.norm(Z, "fro"))
    w, V = np.linalg.eigh(Z)
    null = np.abs(w) <= tol
    Vn, Vr = V[:, null], V[:, ~null]
    Zr = np.diag(w[~null])
    Zr_expr = Affine(Zr) if z_scale is None else _scalar_times(z_scale, Zr)
    Yr = Y @ Vr
    if Vr.shape[1]:
        lmi = Affine.bmat([[X, Yr], [Yr.T, Zr_expr]])
    else:
        lmi = X
    eq = Y @ Vn if Vn.shape[1] else None
    return lmi, eq, float(w[-1]) if w.size else -np.inf


def _scalar_times(s: Affine, M):
    """``s * M`` for a 1x1 affine ``s`` and constant matrix ``M``."""
    M = np.atleast_2d(M)
    return Affine(s.const[0, 0] * M, s.coef[:, 0, 0][:, None, None] * M[None])


def _pieces(which, sys: StateSpace, qsr, P: Affine, tau: Affine):
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    X = P @ A + A.T @ P
    if which == "eq1":
        Y = P @ B + _scalar_times(tau, -C.T)
        Z = -D - D.T
    elif which == "eq2":
        Q, S, R = qsr.Q, qsr.S, qsr.R
        X = X + _scalar_times(tau, -C.T @ Q @ C)
        Y = P @ B + _scalar_times(tau, -C.T @ (Q @ D + S))
        Z = -R - S.T @ D - D.T @ S - D.T @ Q @ D
    else:
        Q, S, R = qsr.Q, qsr.S, qsr.R
        Y = Affine.bmat([[P @ B + _scalar_times(tau, -C.T @ S), _scalar_times(tau, C.T)]])
        Z = np.block([[-R - S.T @ D - D.T @ S, D.T], [D, np.linalg.inv(Q)]])
    return X, Y, Z


def _check_minimal(sys: StateSpace):
    n = sys.n
    if numerical_rank(controllability_matrix(sys.A, sys.B)) < n:
        warnings.warn("system is not controllable; KYP equivalence may not hold", stacklevel=3)
    if numerical_rank(controllability_matrix(sys.A.T, sys.C.T)) < n:
        warnings.warn("system is not observable; KYP equivalence may not hold", stacklevel=3)


def _verify(which, sys: StateSpace, qsr, config=conic.SolverConfig(), check_minimal=True):
    if check_minimal:
        _check_minimal(sys)
    b = ProgramBuilder()
    P = b.symmetric(sys.n)
    tau = b.scalar()
    X, Y, Z = _pieces(which, sys, qsr, P, tau)
    lmi, eq, worst = reduce_trailing(X, Y, Z, z_scale=tau)
    if worst > 1e-9 * max(1.0, np.linalg.norm(Z, "fro")):
        return Verification(False, None, -worst, "constant block of the LMI is not NSD")
    b.nsd(lmi)
    b.psd(P)
    b.psd(tau)
    if eq is not None:
        b.equal(eq)
    b.equal(P.trace() + tau, 1.0)
    fr = conic.feasibility(b.build(), config)
    Pv, tv = P.value(fr.x), float(tau.value(fr.x)[0, 0])
    if fr.report.status not in (conic.Status.OPTIMAL, conic.Status.MAX_ITERATIONS) or tv <= 0:
        return Verification(False, None, fr.margin, fr.report.message or "no certificate")
    cert, valid = _certify(which, sys, Pv / tv, qsr)
    if valid and fr.margin > -LMI_TOL:
        return Verification(True, cert, fr.margin)
    return Verification(False, None, fr.margin,
                        f"best margin {fr.margin:.3e}, recheck margin {cert.lmi_margin:.3e}")


def verify_passive(sys: StateSpace, config=conic.SolverConfig()):
    """Passivity via the KYP LMI ``eq1``.

    Returns a :class:`Verification`; infeasibility is a result, not an error.
    """
    if sys.m != sys.p:
        raise ValueError("passivity needs as many inputs as outputs")
    return _verify("eq1", sys, None, config)


def verify_qsr(sys: StateSpace, qsr: QSRTriple, config=conic.SolverConfig()):
    """(Q, S, R)-dissipativity via ``eq2``."""
    _check_dims(sys, qsr)
    return _verify("eq2", sys, qsr, config)


def verify_qsr_schur(sys: StateSpace, qsr: QSRTriple, config=conic.SolverConfig()):
    """(Q, S, R)-dissipativity via the Schur-complemented ``eq4``; needs ``Q < 0``."""
    _check_dims(sys, qsr)
    if definiteness(qsr.Q).classification is not Definiteness.ND:
        raise InvalidCase("eq4 requires Q negative definite")
    return _verify("eq4", sys, qsr, config)


def _check_dims(sys, qsr):
    if qsr.p != sys.p or qsr.m != sys.m:
        raise ValueError(f"QSR triple is for (p={qsr.p}, m={qsr.m}), "
                         f"system has p={sys.p}, m={sys.m}")


# -- closed-loop stability ----------------------------------------------------

def stability_matrix(qsr1: QSRTriple, qsr2: QSRTriple, alpha):
    """``[[Q1 + a R2, -S1 + a S2'], [*, R1 + a Q2]]`` for negative feedback."""
    off = -qsr1.S + alpha * qsr2.S.T
    return as_symmetric(np.block([[qsr1.Q + alpha * qsr2.R, off],
                                  [off.T, qsr1.R + alpha * qsr2.Q]]))


def _check_loop(qsr1, qsr2):
    if qsr2.m != qsr1.p or qsr2.p != qsr1.m:
        raise ValueError(f"QSR triples do not close a loop: plant (p={qsr1.p}, m={qsr1.m}), "
                         f"controller (p={qsr2.p}, m={qsr2.m})")


def stability_check(qsr1: QSRTriple, qsr2: QSRTriple, log_range=(-6.0, 6.0), grid=121,
                    tol=1e-9):
    """Search ``alpha > 0`` making the closed-loop QSR matrix negative definite.

    ``lambda_max`` of the matrix is convex in ``alpha`` (it is affine), so a
    coarse grid over ``log10(alpha)`` followed by golden-section refinement
    finds the minimum. Stable iff that minimum is below ``-tol``.
    """
    _check_loop(qsr1, qsr2)

    def f(s):
        return float(np.linalg.eigvalsh(stability_matrix(qsr1, qsr2, 10.0 ** s))[-1])

    ss = np.linspace(*log_range, grid)
    vals = np.array([f(s) for s in ss])
    k = int(np.argmin(vals))
    lo, hi = ss[max(k - 1, 0)], ss[min(k + 1, grid - 1)]
    invphi = (np.sqrt(5.0) - 1) / 2
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(80):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    cands = [(vals[k], ss[k]), (fc, c), (fd, d)]
    best, s_best = min(cands)
    return StabilityVerdict(bool(best < -tol), float(10.0 ** s_best), float(best))


def synthesize_controller_qsr(plant_qsr: QSRTriple, controller_q="negative", eps=1e-3,
                              require_r_psd=True, require_s_full_rank=True, bound=None,
                              config=conic.SolverConfig()):
    """Find a controller supply rate that closes a stable loop with ``plant_qsr``.

    With ``alpha`` fixed to 1 (the closed-loop matrix is invariant under
    ``(Q2, S2, R2, alpha) -> (c Q2, c S2, c R2, alpha / c)``), maximize a
    common margin over: the closed-loop matrix ``<= -t I``; ``R2 >= t I``
    (if ``require_r_psd``); ``Q2 <= -(eps + t) I`` or ``Q2 = 0``; and
    ``tr(R2) - tr(Q2) = dim`` together with entry bounds so the program
    is bounded.  ``controller_q`` is ``"negative"`` or ``"zero"``.

    A passive plant cannot be closed this way with ``R2 >= 0``; pass
    ``require_r_psd=False`` there.  ``require_s_full_rank`` enforces the
    rank condition that guarantees a learnable controller; symmetric
    problems such as gain bounds have ``S2 = 0`` at the optimum.
    """
    m1, p1 = plant_qsr.m, plant_qsr.p
    mc, pc = p1, m1              # controller inputs / outputs
    dim = m1 + p1
    bound = 10.0 * dim if bound is None else bound
    b = ProgramBuilder()
    Q2 = b.symmetric(pc)
    S2 = b.matrix(pc, mc)
    R2 = b.symmetric(mc)
    off = S2.T - plant_qsr.S
    M = Affine.bmat([[R2 + plant_qsr.Q, off], [off.T, Q2 + plant_qsr.R]])
    b.nsd(M)
    if require_r_psd:
        b.psd(R2)
    if controller_q == "negative":
        b.nsd(Q2 + eps * np.eye(pc))
        b.psd(Q2 + bound * np.eye(pc))
    elif controller_q == "zero":
        b.equal(Q2)
    else:
        raise ValueError("controller_q must be 'negative' or 'zero'")
    b.psd(bound * np.eye(mc) - R2)
    if not require_r_psd:
        b.psd(R2 + bound * np.eye(mc))
    b.psd(Affine.bmat([[bound * np.eye(pc), S2], [S2.T, bound * np.eye(mc)]]))
    b.equal(R2.trace() - Q2.trace(), float(dim))
    fr = conic.feasibility(b.build(), config)
    res = QSRTriple(Q2.value(fr.x), S2.value(fr.x), R2.value(fr.x))
    verdict = stability_check(plant_qsr, res)
    s = np.linalg.svd(res.S, compute_uv=False)
    if not (fr.feasible and verdict.stable):
        raise NoStabilizingQSR(f"no stabilizing controller supply rate found "
                               f"(margin {fr.margin:.3e})")
    if require_s_full_rank and (s.size == 0 or s[-1] <= 1e-8 * max(1.0, s[0])):
        raise NoStabilizingQSR("synthesized S is rank deficient")
    return res


# -- constructive controller --------------------------------------------------

def _check_controller_qsr(qsr: QSRTriple):
    S = qsr.S
    if numerical_rank(S, 1e-10) < S.shape[1]:
        raise InvalidCase("S must have full column rank")
    if definiteness(qsr.R).classification not in (Definiteness.PD, Definiteness.PSD):
        raise InvalidCase("R must be positive semidefinite")
    qcls = definiteness(qsr.Q).classification
    q_zero = not np.any(qsr.Q)
    if qcls is not Definiteness.ND and not q_zero:
        raise InvalidCase("Q must be negative definite or zero")
    return q_zero


def feasible_controller(Ahat, Bhat, qsr: QSRTriple, delta=1.0):
    """Construct ``Chat`` making ``(Ahat, Bhat, Chat, 0)`` (Q, S, R)-dissipative.

    ``Chat' = P Bhat S^+`` with ``P = Pi^{-1}`` and
    ``Ahat Pi + Pi Ahat' + M + delta I = 0``, where
    ``M = -Bhat S^+ Q S^+' Bhat'`` (zero when ``Q = 0``).  The ``delta I``
    term makes the result strict even when ``M`` is only semidefinite.
    Returns ``(Chat, Certificate)``.
    """
    Ahat = np.atleast_2d(np.asarray(Ahat, dtype=float))
    Bhat = np.asarray(Bhat, dtype=float).reshape(Ahat.shape[0], -1)
    if not is_hurwitz(Ahat):
        raise InfeasibleInput("observer matrix must be Hurwitz")
    q_zero = _check_controller_qsr(qsr)
    S = qsr.S
    if S.shape[1] != Bhat.shape[1]:
        raise ValueError(f"S has {S.shape[1]} columns but Bhat has {Bhat.shape[1]} inputs")
    S_pinv = np.linalg.solve(S.T @ S, S.T)
    n = Ahat.shape[0]
    M = np.zeros((n, n)) if q_zero else -Bhat @ S_pinv @ qsr.Q @ S_pinv.T @ Bhat.T
    Pi = solve_lyapunov(Ahat, M + delta * np.eye(n))
    P = as_symmetric(np.linalg.inv(Pi))
    Chat = (P @ Bhat @ S_pinv).T
    ctrl = StateSpace(Ahat, Bhat, Chat)
    cert, valid = _certify("eq2", ctrl, P, qsr)
    if not valid:
        raise InfeasibleInput(f"constructed controller failed its own check "
                              f"(margin {cert.lmi_margin:.3e})")
    return Chat, cert

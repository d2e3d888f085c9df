"""LTI systems, QSR supply rates, interconnections and the benchmark plants.

Conventions
-----------
A QSR triple ``(Q, S, R)`` belongs to a system with ``m`` inputs and ``p``
outputs and defines the supply rate ``y'Qy + 2 y'Su + u'Ru``; so ``Q`` is
``p x p``, ``S`` is ``p x m`` and ``R`` is ``m x m``.

Interconnections follow ``u_i = r_i - sum_j H_ij y_j``.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionError, InvalidCase
from .numerics import as_symmetric


def _mat(x, shape=None, name="matrix"):
    a = np.atleast_2d(np.asarray(x, dtype=float))
    if shape is not None:
        if a.size == 0 and 0 in shape:
            a = a.reshape(shape)
        elif a.shape != shape:
            raise DimensionError(f"{name} has shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True)
class StateSpace:
    """``dx/dt = A x + B u``, ``y = C x + D u``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: Optional[np.ndarray] = None

    def __post_init__(self):
        A = _mat(self.A, name="A")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        B = np.asarray(self.B, dtype=float)
        B = _mat(B.reshape(n, -1) if B.ndim < 2 else B, name="B")
        C = np.asarray(self.C, dtype=float)
        C = _mat(C.reshape(-1, n) if C.ndim < 2 else C, name="C")
        if B.shape[0] != n or C.shape[1] != n:
            raise DimensionError(f"B {B.shape} / C {C.shape} inconsistent with n={n}")
        D = np.zeros((C.shape[0], B.shape[1])) if self.D is None else self.D
        D = _mat(D, (C.shape[0], B.shape[1]), name="D")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    def __eq__(self, other):
        if not isinstance(other, StateSpace):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in "ABCD")

    __hash__ = None


@dataclass(frozen=True)
class QSRTriple:
    Q: np.ndarray
    S: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        Q = as_symmetric(self.Q)
        R = as_symmetric(self.R)
        S = _mat(self.S, (Q.shape[0], R.shape[0]), name="S")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "R", R)

    @property
    def p(self):
        return self.Q.shape[0]

    @property
    def m(self):
        return self.R.shape[0]

    def supply(self, u, y):
        u = np.asarray(u, dtype=float)
        y = np.asarray(y, dtype=float)
        return float(y @ self.Q @ y + 2 * y @ self.S @ u + u @ self.R @ u)

    def __eq__(self, other):
        if not isinstance(other, QSRTriple):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in "QSR")

    __hash__ = None


# -- special cases of QSR dissipativity ---------------------------------------

@dataclass(frozen=True)
class Passive:
    pass


@dataclass(frozen=True)
class BoundedGain:
    gamma: float


@dataclass(frozen=True)
class InteriorConicNondegenerate:
    """Interior cone ``[a, b]`` with ``a < 0 < b``."""

    a: float
    b: float


@dataclass(frozen=True)
class InteriorConicDegenerate:
    """Degenerate interior cone with ``d < 0``."""

    d: float


@dataclass(frozen=True)
class GeneralQSR:
    qsr: QSRTriple


SupplyCase = (Passive, BoundedGain, InteriorConicNondegenerate,
              InteriorConicDegenerate, GeneralQSR)


def case_to_qsr(case, p, m):
    """QSR triple for a special case on a system with ``m`` inputs, ``p`` outputs.

    >>> case_to_qsr(BoundedGain(2.0), 1, 1).R
    array([[4.]])
    """
    if isinstance(case, GeneralQSR):
        qsr = case.qsr
        if qsr.p != p or qsr.m != m:
            raise DimensionError(f"QSR triple is for (p={qsr.p}, m={qsr.m}), "
                                 f"expected (p={p}, m={m})")
        if np.linalg.eigvalsh(qsr.Q).max() > 1e-12 * max(1.0, np.abs(qsr.Q).max()):
            raise InvalidCase("general QSR case requires Q negative semidefinite")
        return qsr
    if isinstance(case, BoundedGain):
        if not case.gamma > 0:
            raise InvalidCase(f"gain bound must be positive, got {case.gamma}")
        return QSRTriple(-np.eye(p), np.zeros((p, m)), case.gamma ** 2 * np.eye(m))
    if p != m:
        raise DimensionError(f"{type(case).__name__} needs a square system, got p={p}, m={m}")
    eye = np.eye(p)
    if isinstance(case, Passive):
        return QSRTriple(0 * eye, 0.5 * eye, 0 * eye)
    if isinstance(case, InteriorConicNondegenerate):
        a, b = case.a, case.b
        if not a < 0 < b:
            raise InvalidCase(f"nondegenerate interior cone needs a < 0 < b, got [{a}, {b}]")
        return QSRTriple(-eye, 0.5 * (a + b) * eye, -a * b * eye)
    if isinstance(case, InteriorConicDegenerate):
        if not case.d < 0:
            raise InvalidCase(f"degenerate interior cone needs d < 0, got {case.d}")
        return QSRTriple(0 * eye, 0.5 * eye, -case.d * eye)
    raise InvalidCase(f"unknown supply case {case!r}")


# -- interconnections ---------------------------------------------------------

@dataclass(frozen=True)
class Interconnection:
    """``H`` with ``u_i = r_i - sum_j H_ij y_j``; ``block_dims[i] = (m_i, p_i)``."""

    H: np.ndarray
    block_dims: tuple

    def __post_init__(self):
        dims = tuple((int(m), int(p)) for m, p in self.block_dims)
        H = np.asarray(self.H, dtype=float)
        shape = (sum(m for m, _ in dims), sum(p for _, p in dims))
        H = _mat(H.reshape(shape) if H.size == shape[0] * shape[1] else H, shape, name="H")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "block_dims", dims)


def negative_feedback(plant_dims, controller_dims):
    """Interconnection for ``u1 = r1 - y2``, ``u2 = r2 + y1``.

    Dimensions are given as ``(inputs, outputs)`` pairs.
    """
    m1, p1 = plant_dims
    m2, p2 = controller_dims
    if p1 != m2 or p2 != m1:
        raise DimensionError(f"plant (m={m1}, p={p1}) cannot be closed with "
                             f"controller (m={m2}, p={p2})")
    H = np.block([[np.zeros((m1, p1)), np.eye(m1)],
                  [-np.eye(m2), np.zeros((m2, p2))]])
    return Interconnection(H, ((m1, p1), (m2, p2)))


def network_qsr(subsystem_qsr: Sequence[QSRTriple], H):
    """Supply rate of a network of QSR-dissipative subsystems.

    ``Qbar = Q + H'RH - SH - H'S'``, ``Sbar = S - H'R``, ``Rbar = R`` with
    block-diagonal ``Q, S, R``.
    """
    if not subsystem_qsr:
        raise DimensionError("network_qsr needs at least one subsystem")
    Q = scipy.linalg.block_diag(*[q.Q for q in subsystem_qsr])
    S = scipy.linalg.block_diag(*[q.S for q in subsystem_qsr])
    R = scipy.linalg.block_diag(*[q.R for q in subsystem_qsr])
    if isinstance(H, Interconnection):
        dims = tuple((q.m, q.p) for q in subsystem_qsr)
        if H.block_dims != dims:
            raise DimensionError(f"interconnection blocks {H.block_dims} != subsystem dims {dims}")
        H = H.H
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if H.shape != (R.shape[0], Q.shape[0]):
        raise DimensionError(f"H has shape {H.shape}, expected {(R.shape[0], Q.shape[0])}")
    Qbar = Q + H.T @ R @ H - S @ H - H.T @ S.T
    Sbar = S - H.T @ R
    return QSRTriple(Qbar, Sbar, R)


# -- mass-spring-damper chains ------------------------------------------------

@dataclass(frozen=True)
class ChainParams:
    """Chain of masses; spring/damper ``i`` joins mass ``i`` to mass ``i-1``
    (mass 0 to the wall). The last mass is free."""

    masses: tuple
    springs: tuple
    dampers: tuple

    def __post_init__(self):
        vals = [tuple(float(v) for v in np.atleast_1d(x))
                for x in (self.masses, self.springs, self.dampers)]
        if len({len(v) for v in vals}) != 1 or len(vals[0]) == 0:
            raise ValueError("masses, springs and dampers must have equal nonzero length")
        if any(not (v > 0 and np.isfinite(v)) for seq in vals for v in seq):
            raise ValueError("chain parameters must be finite and strictly positive")
        for name, v in zip(("masses", "springs", "dampers"), vals):
            object.__setattr__(self, name, v)

    @property
    def n_masses(self):
        return len(self.masses)


def _chain_matrix(coeffs):
    N = len(coeffs)
    K = np.zeros((N, N))
    for i, k in enumerate(coeffs):
        K[i, i] += k
        if i > 0:
            K[i - 1, i - 1] += k
            K[i, i - 1] -= k
            K[i - 1, i] -= k
    return K


def build_chain(params: ChainParams, io_selection="all"):
    """State space of a chain with forces in and collocated velocities out.

    State ordering is all positions, then all velocities. ``io_selection``
    lists the (0-based) actuated masses, or ``"all"``.
    """
    N = params.n_masses
    sel = list(range(N)) if isinstance(io_selection, str) and io_selection == "all" \
        else [int(i) for i in io_selection]
    if not sel:
        raise ValueError("io_selection must name at least one mass")
    if any(i < 0 or i >= N for i in sel) or len(set(sel)) != len(sel):
        raise ValueError(f"invalid io_selection {sel} for {N} masses")
    Minv = np.diag(1.0 / np.array(params.masses))
    K = _chain_matrix(params.springs)
    Cd = _chain_matrix(params.dampers)
    Z, I = np.zeros((N, N)), np.eye(N)
    A = np.block([[Z, I], [-Minv @ K, -Minv @ Cd]])
    Esel = I[:, sel]
    B = np.vstack([np.zeros((N, len(sel))), Minv @ Esel])
    C = np.hstack([np.zeros((len(sel), N)), Esel.T])
    return StateSpace(A, B, C)


def sample_chain(rng, k_range, c_range, delta, n_masses=4, mass=1.0, floor=1e-3):
    """Draw nominal chain parameters and a perturbed "true" set.

    Nominal springs/dampers are uniform in the given ranges. True values
    multiply each nominal by an independent factor uniform in
    ``[1 - delta, 1 + delta]``, floored at ``floor * nominal`` so they stay
    positive. The factor draws do not depend on ``delta``, so for a fixed
    seed the true system moves continuously as ``delta`` grows.
    """
    if delta < 0:
        raise ValueError("uncertainty fraction must be nonnegative")
    (k_lo, k_hi), (c_lo, c_hi) = k_range, c_range
    if not (0 < k_lo <= k_hi and 0 < c_lo <= c_hi):
        raise ValueError("parameter ranges must be positive and ordered")
    rng = np.random.default_rng(rng)
    k_nom = rng.uniform(k_lo, k_hi, n_masses)
    c_nom = rng.uniform(c_lo, c_hi, n_masses)
    wk = rng.uniform(-1.0, 1.0, n_masses)
    wc = rng.uniform(-1.0, 1.0, n_masses)
    k_true = np.maximum(k_nom * (1.0 + delta * wk), floor * k_nom)
    c_true = np.maximum(c_nom * (1.0 + delta * wc), floor * c_nom)
    masses = (mass,) * n_masses
    return ChainParams(masses, k_nom, c_nom), ChainParams(masses, k_true, c_true)


# -- nonlinear plants ---------------------------------------------------------

@dataclass(frozen=True)
class NonlinearSubsystem:
    """``dx/dt = rhs(x, u, t)``, ``y = output(x, u)``.

    Both maps act row-wise on batches: ``x`` is ``(batch, n)``, ``u`` is
    ``(batch, m)``.
    """

    n: int
    m: int
    p: int
    rhs: Callable = field(repr=False)
    output: Callable = field(repr=False)


def g1_true():
    """Scalar plant ``dx = -x^3 - x + e``, ``y = dx - 2e = -x^3 - x - e``."""
    def rhs(x, e, t=0.0):
        return -x ** 3 - x + e

    def out(x, e):
        return -x ** 3 - x - e

    return NonlinearSubsystem(1, 1, 1, rhs, out)


def g1_nominal():
    return StateSpace([[-1.0]], [[1.0]], [[-1.0]], [[-1.0]])


def two_block_network(A1, B1, C1, D1, g2: StateSpace, sign=1.0):
    """Linear network with ``e1 = u1 + sign * y2``, ``e2 = u2 - y1``; state
    ``[x1, x2]``.

    ``g2`` must be strictly proper so there is no algebraic loop.
    """
    A1, B1, C1, D1 = (np.atleast_2d(np.asarray(v, dtype=float)) for v in (A1, B1, C1, D1))
    A2, B2, C2 = g2.A, g2.B, g2.C
    if np.any(g2.D):
        raise ValueError("second subsystem must have D = 0")
    n1, m1 = B1.shape
    n2, m2 = B2.shape
    A = np.block([[A1, sign * B1 @ C2], [-B2 @ C1, A2 - sign * B2 @ D1 @ C2]])
    B = np.block([[B1, np.zeros((n1, m2))], [-B2 @ D1, B2]])
    C = np.block([[C1, sign * D1 @ C2], [np.zeros((C2.shape[0], n1)), C2]])
    D = np.block([[D1, np.zeros((D1.shape[0], m2))],
                  [np.zeros((C2.shape[0], m1)), np.zeros((C2.shape[0], m2))]])
    return StateSpace(A, B, C, D)


def nonlinear_network(g1: NonlinearSubsystem, g2: StateSpace, sign=1.0):
    """Interconnect a nonlinear ``g1`` with an LTI ``g2`` as in
    :func:`two_block_network`."""
    n1, n2 = g1.n, g2.n
    A2, B2, C2 = g2.A, g2.B, g2.C

    def signals(x, u):
        x1, x2 = x[:, :n1], x[:, n1:]
        u1, u2 = u[:, :g1.m], u[:, g1.m:]
        y2 = x2 @ C2.T
        e1 = u1 + sign * y2
        y1 = g1.output(x1, e1)
        return x1, x2, e1, u2 - y1, y1, y2

    def rhs(x, u, t=0.0):
        x1, x2, e1, e2, _, _ = signals(x, u)
        return np.hstack([g1.rhs(x1, e1, t), x2 @ A2.T + e2 @ B2.T])

    def out(x, u):
        *_, y1, y2 = signals(x, u)
        return np.hstack([y1, y2])

    return NonlinearSubsystem(n1 + n2, g1.m + g2.m, g1.p + g2.p, rhs, out)


@dataclass(frozen=True)
class Example2Plants:
    g1_true: NonlinearSubsystem
    g2_true: StateSpace
    true: NonlinearSubsystem
    true_linearized: StateSpace
    g1_nominal: StateSpace
    g2_nominal: StateSpace
    nominal: StateSpace
    # u_i = r_i - sum_j H_ij y_j between the two subsystems
    H: np.ndarray


COUPLINGS = {"published": -1.0, "literal": 1.0}


def example2_plants(coupling="published"):
    """True and nominal plants of the nonlinear network benchmark.

    ``coupling="published"`` closes the loop with ``e1 = u1 - y2``, the
    interconnection ``H = [[0, 1], [1, 0]]`` under which the published
    network supply rate holds.  ``"literal"`` uses ``e1 = u1 + y2``; that
    network is not dissipative with respect to the published rate.
    """
    if coupling not in COUPLINGS:
        raise ValueError(f"coupling must be one of {sorted(COUPLINGS)}")
    sign = COUPLINGS[coupling]
    g2t = build_chain(ChainParams((0.5, 0.5), (5.0, 5.0), (1e-3, 1e-3)), [0])
    g2n = build_chain(ChainParams((1.0,), (2.5,), (0.05,)), [0])
    g1n = g1_nominal()
    g1t = g1_true()
    lin_true = two_block_network(g1n.A, g1n.B, g1n.C, g1n.D, g2t, sign)
    nominal = two_block_network(g1n.A, g1n.B, g1n.C, g1n.D, g2n, sign)
    H = np.array([[0.0, -sign], [1.0, 0.0]])
    return Example2Plants(g1t, g2t, nonlinear_network(g1t, g2t, sign), lin_true,
                          g1n, g2n, nominal, H)


# Published supply rates for the network benchmark.
EXAMPLE2_G1_QSR = QSRTriple([[-1.0]], [[-1.5]], [[-2.0]])
EXAMPLE2_PLANT_QSR = QSRTriple([[-1.0, 1.0], [1.0, -2.0]],
                               [[-1.5, 0.0], [2.0, 0.5]],
                               [[-2.0, 0.0], [0.0, 0.0]])
EXAMPLE2_CONTROLLER_QSR = QSRTriple([[-0.52, 0.0], [0.0, -1.04]],
                                    [[-1.5, 2.0], [0.0, 0.5]],
                                    [[0.45, -0.48], [-0.48, 0.92]])

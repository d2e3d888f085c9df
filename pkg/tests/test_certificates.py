import time

import numpy as np
import pytest

from dissipative_bc.certificates import (_certify, feasible_controller, kyp_matrix, lmi_margin,
                                         stability_check, stability_matrix,
                                         synthesize_controller_qsr, verify_passive, verify_qsr,
                                         verify_qsr_schur)
from dissipative_bc.errors import InfeasibleInput, InvalidCase, NoStabilizingQSR
from dissipative_bc.systems import (EXAMPLE2_CONTROLLER_QSR, EXAMPLE2_PLANT_QSR, BoundedGain,
                                    ChainParams, Passive, QSRTriple, StateSpace, build_chain,
                                    case_to_qsr, sample_chain)

from conftest import random_hurwitz

LAG = StateSpace([[-1.0]], [[1.0]], [[1.0]])


def gain(g):
    return QSRTriple([[-1.0]], [[0.0]], [[g * g]])


def test_passive_lag_and_matrix():
    ver = verify_passive(LAG)
    assert ver.feasible and ver.certificate.lmi_margin <= 1e-8
    M = kyp_matrix("eq1", -1, 1, 1, 0, 1)
    assert np.array_equal(M, np.diag([-2.0, 0.0]))


def test_sign_flipped_lag_not_passive():
    assert not verify_passive(StateSpace([[-1.0]], [[1.0]], [[-1.0]])).feasible


def test_random_chain_passive(rng):
    nom, _ = sample_chain(rng, (0.001, 10), (0.001, 1), 0.0)
    ver = verify_passive(build_chain(nom))
    assert ver.feasible
    P = ver.certificate.P
    assert np.linalg.eigvalsh(P)[0] > 0


def test_qsr_lag_examples():
    assert verify_qsr(LAG, case_to_qsr(Passive(), 1, 1)).feasible
    assert verify_qsr(LAG, gain(1.0)).feasible
    assert not verify_qsr(LAG, gain(0.5)).feasible
    assert verify_qsr_schur(LAG, gain(1.0)).feasible
    assert not verify_qsr_schur(LAG, gain(0.5)).feasible
    with pytest.raises(InvalidCase):
        verify_qsr_schur(LAG, case_to_qsr(Passive(), 1, 1))
    with pytest.raises(ValueError):
        verify_qsr(LAG, case_to_qsr(Passive(), 2, 2))


def test_certificate_reverifies():
    ver = verify_qsr(LAG, gain(1.2))
    P = ver.certificate.P
    M = kyp_matrix("eq2", LAG.A, LAG.B, LAG.C, LAG.D, P, gain(1.2))
    assert lmi_margin(M) <= 1e-8 and P[0, 0] > 0


def random_instance(rng):
    n = int(rng.integers(1, 7))
    m = int(rng.integers(1, 3))
    p = int(rng.integers(1, 3))
    sys = StateSpace(random_hurwitz(rng, n, shift=0.3), rng.standard_normal((n, m)),
                     rng.standard_normal((p, n)), 0.3 * rng.standard_normal((p, m)))
    L = rng.standard_normal((p, p))
    Q = -(L @ L.T + 0.1 * np.eye(p))
    S = 0.5 * rng.standard_normal((p, m))
    R = rng.uniform(0.5, 30.0) * np.eye(m)
    return sys, QSRTriple(Q, S, R)


def test_schur_equivalence(rng):
    agree = feasible = 0
    for _ in range(40):
        sys, qsr = random_instance(rng)
        a = verify_qsr(sys, qsr, ).feasible
        b = verify_qsr_schur(sys, qsr).feasible
        agree += a == b
        feasible += a
    assert agree == 40
    assert 0 < feasible < 40


def test_small_gain_examples():
    assert stability_check(gain(0.5), gain(0.5)).stable
    assert np.array_equal(stability_matrix(gain(0.5), gain(0.5), 1.0), -0.75 * np.eye(2))
    assert not stability_check(gain(1.0), gain(1.0)).stable


def test_small_gain_grid():
    gs = np.logspace(-1.5, 1.5, 20)
    for g1 in gs:
        for g2 in gs:
            if abs(g1 * g2 - 1) < 1e-3:
                continue
            assert stability_check(gain(g1), gain(g2)).stable == (g1 * g2 < 1)


def test_example2_fixture():
    t0 = time.perf_counter()
    v = stability_check(EXAMPLE2_PLANT_QSR, EXAMPLE2_CONTROLLER_QSR)
    assert time.perf_counter() - t0 < 1.0
    assert v.stable and v.margin < 0 and v.alpha > 0
    assert np.linalg.eigvalsh(stability_matrix(EXAMPLE2_PLANT_QSR, EXAMPLE2_CONTROLLER_QSR,
                                               v.alpha))[-1] < 0


def test_stability_check_dims():
    with pytest.raises(ValueError):
        stability_check(gain(1.0), case_to_qsr(Passive(), 2, 2))


def test_synthesis_cases():
    passive = case_to_qsr(Passive(), 1, 1)
    res = synthesize_controller_qsr(passive, require_r_psd=False)
    assert stability_check(passive, res).stable
    res = synthesize_controller_qsr(gain(0.5), require_s_full_rank=False)
    assert stability_check(gain(0.5), res).stable
    res = synthesize_controller_qsr(EXAMPLE2_PLANT_QSR)
    assert stability_check(EXAMPLE2_PLANT_QSR, res).stable
    with pytest.raises(NoStabilizingQSR):
        synthesize_controller_qsr(QSRTriple([[1.0]], [[0.0]], [[1.0]]))


def test_alpha_search_against_dense_grid(rng):
    # lambda_max is convex along alpha, so the search never misses a dense-grid minimum
    for _ in range(20):
        Q = rng.standard_normal((2, 2))
        q1 = QSRTriple(Q + Q.T - 3 * np.eye(2), rng.standard_normal((2, 2)), np.eye(2))
        q2 = QSRTriple(-np.eye(2), rng.standard_normal((2, 2)), rng.uniform(0, 1) * np.eye(2))
        v = stability_check(q1, q2)
        dense = min(np.linalg.eigvalsh(stability_matrix(q1, q2, 10 ** s))[-1]
                    for s in np.linspace(-6, 6, 2001))
        assert v.margin <= dense + 1e-9


def test_alpha_curve_has_single_dip(rng):
    # lambda_max of an affine matrix pencil is convex in alpha, so at most two sign changes
    for _ in range(20):
        Q = rng.standard_normal((2, 2))
        q1 = QSRTriple(Q + Q.T - 2 * np.eye(2), rng.standard_normal((2, 2)), np.eye(2))
        q2 = QSRTriple(-np.eye(2), rng.standard_normal((2, 2)), rng.uniform(0, 2) * np.eye(2))
        alphas = np.linspace(1e-3, 20, 400)
        lam = np.array([np.linalg.eigvalsh(stability_matrix(q1, q2, a))[-1] for a in alphas])
        assert np.all(np.diff(lam, 2) >= -1e-9)
        assert np.count_nonzero(np.diff(np.sign(lam))) <= 2


def test_feasible_controller_passive():
    Chat, cert = feasible_controller(-np.eye(2), np.eye(2), case_to_qsr(Passive(), 2, 2))
    assert np.allclose(Chat, 2 * cert.P)
    M = kyp_matrix("eq2", -np.eye(2), np.eye(2), 2 * np.eye(2), np.zeros((2, 2)), np.eye(2),
                   case_to_qsr(Passive(), 2, 2))
    assert np.allclose(M, np.diag([-2, -2, 0, 0]))


def test_feasible_controller_negative_q():
    qsr = QSRTriple([[-1.0]], [[0.5]], [[1.0]])
    Chat, cert = feasible_controller([[-1.0]], [[1.0]], qsr)
    assert verify_qsr(StateSpace([[-1.0]], [[1.0]], Chat), qsr).feasible
    assert cert.lmi_margin <= 1e-8


def test_feasible_controller_errors():
    with pytest.raises(InfeasibleInput):
        feasible_controller(np.diag([1.0, -1.0]), np.eye(2), case_to_qsr(Passive(), 2, 2))
    with pytest.raises(InvalidCase):
        feasible_controller([[-1.0]], [[1.0]], QSRTriple([[-1.0]], [[0.0]], [[1.0]]))


def test_feasible_controller_random(rng):
    for _ in range(100):
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 3))
        p = m + int(rng.integers(0, 2))
        L = rng.standard_normal((p, p))
        Q = np.zeros((p, p)) if rng.random() < 0.3 else -(L @ L.T + 0.1 * np.eye(p))
        R = rng.standard_normal((m, m))
        qsr = QSRTriple(Q, rng.standard_normal((p, m)), R @ R.T)
        Ahat, Bhat = random_hurwitz(rng, n, 0.2), rng.standard_normal((n, m))
        Chat, cert = feasible_controller(Ahat, Bhat, qsr)
        assert Chat.shape == (p, n)
        assert cert.lmi_margin <= 1e-8
        assert np.linalg.eigvalsh(cert.P)[0] > 0


def test_chain_passive_with_default_params():
    assert verify_passive(build_chain(ChainParams((1.0,) * 4, (2.0,) * 4, (0.3,) * 4))).feasible


def frequency_min_eig(sys, qsr, ws=np.concatenate([[0.0], np.logspace(-3, 3, 1500)])):
    """Smallest eigenvalue of the supply rate on the graph of G(jw), w >= 0 and infinity."""
    worst = np.inf
    for w in list(ws) + [None]:
        G = sys.D if w is None else \
            sys.C @ np.linalg.solve(1j * w * np.eye(sys.n) - sys.A, sys.B) + sys.D
        M = G.conj().T @ qsr.Q @ G + G.conj().T @ qsr.S + qsr.S.T @ G + qsr.R
        worst = min(worst, np.linalg.eigvalsh(0.5 * (M + M.conj().T))[0])
    return worst


def test_verify_matches_frequency_domain(rng):
    checked = 0
    for _ in range(40):
        sys, qsr = random_instance(rng)
        f = frequency_min_eig(sys, qsr)
        if abs(f) < 1e-2:
            continue
        assert verify_qsr(sys, qsr).feasible == (f > 0)
        assert verify_qsr_schur(sys, qsr).feasible == (f > 0)
        checked += 1
    assert checked >= 30


def test_huge_certificate_not_accepted():
    # a rescaled P cannot hide a violated supply-rate block
    qsr = gain(0.5)
    cert, valid = _certify("eq2", LAG, np.array([[1e7]]), qsr)
    assert not valid and cert.lmi_margin > 0

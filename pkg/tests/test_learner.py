import warnings

import numpy as np
import pytest

from dissipative_bc.certificates import feasible_controller, verify_passive, verify_qsr_schur
from dissipative_bc.errors import InvalidCase, LearnerInfeasible
from dissipative_bc.learner import (Dataset, LearnerConfig, LMIRoute, learn_constrained,
                                    learn_unconstrained, objective, resolve_route)
from dissipative_bc.systems import (BoundedGain, GeneralQSR, InteriorConicNondegenerate,
                                    Passive, QSRTriple, StateSpace, case_to_qsr)

from conftest import random_hurwitz


def random_data(rng, N, n, m, C=None, noise=0.0):
    X = rng.standard_normal((N, n))
    C = rng.standard_normal((m, n)) if C is None else C
    return Dataset(X, X @ C.T + noise * rng.standard_normal((N, m)))


def ridge_oracle(data, eta):
    # closed form with samples as columns: U X' (X X' + N eta I)^-1
    X, U = data.xhat.T, data.u.T
    return U @ X.T @ np.linalg.inv(X @ X.T + X.shape[1] * eta * np.eye(X.shape[0]))


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((0, 2)), np.zeros((0, 1)))
    with pytest.raises(ValueError):
        Dataset([[np.inf, 0.0]], [[1.0]])
    d = Dataset.concat([Dataset([[1.0, 0.0]], [1.0]), Dataset([[0.0, 1.0]], [2.0])])
    assert len(d) == 2 and d.u.shape == (2, 1)


def test_single_pair():
    d = Dataset([[1.0, 0.0]], [[1.0]])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert np.allclose(learn_unconstrained(d, 0.0), [[1.0, 0.0]])
    assert np.allclose(learn_unconstrained(d, 1.0), [[0.5, 0.0]])


def test_rank_deficient_flagged():
    with pytest.warns(UserWarning, match="minimum-norm"):
        learn_unconstrained(Dataset([[1.0, 0.0]], [[1.0]]), 0.0)


def test_unconstrained_matches_oracle(rng):
    for eta in (0.0, 0.05, 1.0):
        d = random_data(rng, 50, 4, 2, noise=0.1)
        assert np.allclose(learn_unconstrained(d, eta), ridge_oracle(d, eta), atol=1e-10)


def test_ridge_shrinks_monotonically(rng):
    d = random_data(rng, 40, 3, 2, noise=0.3)
    norms = [np.trace(C @ C.T) for C in (learn_unconstrained(d, e)
                                          for e in (0, 0.01, 0.05, 0.1, 1.0))]
    assert all(a >= b for a, b in zip(norms, norms[1:]))


def test_route_resolution():
    p = case_to_qsr(Passive(), 2, 2)
    g = case_to_qsr(BoundedGain(1.0), 2, 2)
    assert resolve_route(LMIRoute.AUTO, Passive(), p) is LMIRoute.EQ2
    assert resolve_route(LMIRoute.AUTO, BoundedGain(1.0), g) is LMIRoute.EQ4
    assert resolve_route(LMIRoute.EQ1, Passive(), p) is LMIRoute.EQ1
    with pytest.raises(InvalidCase):
        resolve_route(LMIRoute.AUTO, None, QSRTriple(np.eye(1), [[0.0]], [[1.0]]))


def test_route_mismatch_errors(rng):
    Ahat, Bhat = -np.eye(2), np.eye(2)
    d = random_data(rng, 10, 2, 2)
    with pytest.raises(InvalidCase):
        learn_constrained(Ahat, Bhat, d, LearnerConfig(supply_case=BoundedGain(1.0),
                                                       lmi_route="eq2"))
    with pytest.raises(InvalidCase):
        learn_constrained(Ahat, Bhat, d, LearnerConfig(lmi_route="eq4"))
    with pytest.raises(InvalidCase):
        learn_constrained(Ahat, Bhat, d, LearnerConfig(supply_case=BoundedGain(1.0),
                                                       lmi_route="eq1"))


@pytest.mark.parametrize("shortcut", [True, False])
def test_recovers_feasible_generator(rng, shortcut):
    n, m = 3, 2
    Ahat, Bhat = random_hurwitz(rng, n), rng.standard_normal((n, m))
    C0, _ = feasible_controller(Ahat, Bhat, case_to_qsr(Passive(), m, m))
    d = random_data(rng, 30, n, m, C=C0)
    res = learn_constrained(Ahat, Bhat, d, LearnerConfig(eta=0.0, try_unconstrained=shortcut))
    assert np.linalg.norm(res.Chat - C0) <= 1e-4 * np.linalg.norm(C0)
    assert (res.solver_report is None) == shortcut


def test_route_none_is_ridge(rng):
    d = random_data(rng, 60, 4, 2, noise=0.5)
    res = learn_constrained(-np.eye(4), np.ones((4, 2)), d,
                            LearnerConfig(eta=0.05, lmi_route="none"))
    assert np.abs(res.Chat - learn_unconstrained(d, 0.05)).max() <= 1e-6
    assert res.certificate is None


def test_passive_setup_verifies(rng):
    n, m = 4, 2
    Ahat, Bhat = random_hurwitz(rng, n), rng.standard_normal((n, m))
    # a generator far from passive forces the constraint to bind
    d = random_data(rng, 80, n, m, C=-5 * rng.standard_normal((m, n)), noise=0.2)
    res = learn_constrained(Ahat, Bhat, d, LearnerConfig(eta=0.05))
    assert res.solver_report is not None and res.certificate.lmi_margin <= 1e-6
    assert verify_passive(StateSpace(Ahat, Bhat, res.Chat)).feasible
    assert res.training_objective >= objective(learn_unconstrained(d, 0.05), d, 0.05) - 1e-9


def test_eq1_and_eq2_agree_for_passivity(rng):
    n, m = 3, 1
    Ahat, Bhat = random_hurwitz(rng, n), rng.standard_normal((n, m))
    d = random_data(rng, 50, n, m, C=-3 * rng.standard_normal((m, n)))
    a = learn_constrained(Ahat, Bhat, d, LearnerConfig(lmi_route="eq1", try_unconstrained=False))
    b = learn_constrained(Ahat, Bhat, d, LearnerConfig(lmi_route="eq2", try_unconstrained=False))
    assert abs(a.training_objective - b.training_objective) <= 1e-5 * max(1, b.training_objective)


def test_gain_and_conic_cases(rng):
    n, m = 3, 2
    Ahat, Bhat = random_hurwitz(rng, n), rng.standard_normal((n, m))
    d = random_data(rng, 60, n, m, C=4 * rng.standard_normal((m, n)))
    for case in (BoundedGain(0.5), InteriorConicNondegenerate(-1.0, 2.0)):
        res = learn_constrained(Ahat, Bhat, d, LearnerConfig(supply_case=case))
        qsr = case_to_qsr(case, m, m)
        assert verify_qsr_schur(StateSpace(Ahat, Bhat, res.Chat), qsr).feasible


def test_constrained_never_beats_ridge(rng):
    for _ in range(5):
        n, m = 3, 2
        Ahat, Bhat = random_hurwitz(rng, n), rng.standard_normal((n, m))
        d = random_data(rng, 40, n, m, noise=0.5)
        res = learn_constrained(Ahat, Bhat, d, LearnerConfig(eta=0.05))
        assert res.training_objective >= objective(learn_unconstrained(d, 0.05), d, 0.05) - 1e-9


def test_random_controller_qsr_never_infeasible(rng):
    for _ in range(50):
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 3))
        p = m
        L = rng.standard_normal((p, p))
        Q = np.zeros((p, p)) if rng.random() < 0.3 else -(L @ L.T + 0.1 * np.eye(p))
        R = rng.standard_normal((m, m))
        qsr = QSRTriple(Q, rng.standard_normal((p, m)) + 0.5 * np.eye(p, m), R @ R.T)
        Ahat, Bhat = random_hurwitz(rng, n, 0.2), rng.standard_normal((n, m))
        d = random_data(rng, 30, n, p, noise=0.3)
        res = learn_constrained(Ahat, Bhat, d, LearnerConfig(supply_case=GeneralQSR(qsr)))
        assert res.certificate.lmi_margin <= 1e-6


def test_infeasible_diagnosis(rng):
    # an unstable observer leaves no feasible P for the passivity LMI
    d = random_data(rng, 20, 2, 1)
    with pytest.raises(LearnerInfeasible) as exc:
        learn_constrained(np.diag([1.0, -1.0]), np.ones((2, 1)), d,
                          LearnerConfig(try_unconstrained=False))
    assert exc.value.diagnosis["observer_hurwitz"] is False

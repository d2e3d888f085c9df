import time

import numpy as np
import pytest

from dissipative_bc.conic import (Affine, ConicProgram, LMIBlock, ProgramBuilder, SolverConfig,
                                  Status, dump_program, feasibility, load_program, solve)
from dissipative_bc.errors import DimensionError


def lambda_max_program(M):
    k = M.shape[0]
    return ConicProgram([1.0], [LMIBlock(-M, np.eye(k)[None])])


def test_min_t_diag():
    rep = solve(lambda_max_program(np.diag([1.0, 3.0])))
    assert rep.status is Status.OPTIMAL
    assert abs(rep.objective_value - 3.0) <= 1e-6


def test_min_t_nonnegative():
    rep = solve(ConicProgram([1.0], [LMIBlock([[0.0]], [[[1.0]]])]))
    assert rep.ok and abs(rep.objective_value) <= 1e-6


def test_margin_of_passive_lag_matrix():
    # eq1 matrix of the scalar lag at P = 1 is diag(-2, 0)
    prog = ConicProgram(np.zeros(0), [LMIBlock(np.diag([-2.0, 0.0]), np.zeros((0, 2, 2)))])
    fr = feasibility(prog)
    assert abs(fr.margin + 2.0) <= 1e-6
    # the negated matrix has margin 0 exactly at the boundary
    prog = ConicProgram(np.zeros(0), [LMIBlock(np.diag([2.0, 0.0]), np.zeros((0, 2, 2)))])
    fr = feasibility(prog)
    assert abs(fr.margin) <= 1e-6 and not fr.feasible


def test_feasibility_examples():
    fr = feasibility(ConicProgram([0.0], [LMIBlock(np.eye(2), np.zeros((1, 2, 2)))]))
    assert fr.feasible and abs(fr.margin - 1.0) <= 1e-6
    fr = feasibility(ConicProgram(np.zeros(0), [LMIBlock(-np.eye(2), np.zeros((0, 2, 2)))]))
    assert not fr.feasible


def test_feasibility_sign_flipped_lag():
    # eq1 for (A, B, C, D) = (-1, 1, -1, 0): [[-2p, p + 1], [p + 1, 0]] <= 0
    b = ProgramBuilder()
    p = b.scalar()
    b.nsd(Affine.bmat([[-2.0 * p, p + 1.0], [p + 1.0, Affine(np.zeros((1, 1)))]]))
    b.psd(p)
    fr = feasibility(b.build())
    assert not fr.feasible


def test_lambda_max_oracle(rng):
    for _ in range(100):
        k = int(rng.integers(1, 9))
        M = rng.standard_normal((k, k))
        M = M + M.T
        t0 = time.perf_counter()
        rep = solve(lambda_max_program(M))
        assert time.perf_counter() - t0 < 0.5
        lam = np.linalg.eigvalsh(M)[-1]
        assert rep.ok
        assert abs(rep.objective_value - lam) <= 1e-6 * max(1.0, abs(lam))
        assert min(lambda_max_program(M).min_eigenvalues(rep.x)) >= -1e-8 * max(1, abs(lam))


def test_equality_constraints_and_builder(rng):
    # minimize tr(C X) over X >= 0 with tr X = 1: smallest eigenvalue of C
    C = rng.standard_normal((4, 4))
    C = C + C.T
    b = ProgramBuilder()
    X = b.symmetric(4)
    b.psd(X)
    b.equal(X.trace(), 1.0)
    b.minimize((C @ X).trace())
    rep = solve(b.build())
    assert rep.ok
    assert abs(rep.objective_value - np.linalg.eigvalsh(C)[0]) <= 1e-6


def test_cross_check_with_cvxpy(rng):
    cp = pytest.importorskip("cvxpy")
    n = 3
    A = rng.standard_normal((n, n)) - 3 * np.eye(n)
    W = rng.standard_normal((n, n))
    W = W @ W.T + np.eye(n)
    # minimize tr(W P) subject to A'P + PA <= -I, P >= 0
    b = ProgramBuilder()
    P = b.symmetric(n)
    b.nsd(A.T @ P + P @ A + np.eye(n))
    b.psd(P)
    b.minimize((W @ P).trace())
    rep = solve(b.build())
    Pc = cp.Variable((n, n), symmetric=True)
    prob = cp.Problem(cp.Minimize(cp.trace(W @ Pc)),
                      [A.T @ Pc + Pc @ A << -np.eye(n), Pc >> 0])
    prob.solve(solver=cp.CVXOPT if "CVXOPT" in cp.installed_solvers() else None)
    assert rep.ok
    assert abs(rep.objective_value - prob.value) <= 1e-5 * max(1.0, abs(prob.value))


def test_unbounded_and_infeasible_status():
    rep = solve(ConicProgram([-1.0], [LMIBlock([[1.0]], np.zeros((1, 1, 1)))]))
    assert rep.status is Status.UNBOUNDED
    rep = solve(ConicProgram([1.0], [LMIBlock([[-1.0]], [[[1.0]]]),
                                     LMIBlock([[-1.0]], [[[-1.0]]])]))
    assert rep.status is Status.INFEASIBLE


def test_max_iterations_reported():
    rep = solve(lambda_max_program(np.diag([1.0, 3.0])), SolverConfig(max_iter=2))
    assert rep.status in (Status.MAX_ITERATIONS, Status.OPTIMAL)
    assert rep.status is not Status.OPTIMAL or abs(rep.objective_value - 3) <= 1e-6


def test_block_validation():
    with pytest.raises(ValueError):
        LMIBlock([[0.0, 1.0], [0.0, 0.0]], np.zeros((0, 2, 2)))
    with pytest.raises(DimensionError):
        ConicProgram([1.0, 2.0], [LMIBlock(np.eye(2), np.zeros((1, 2, 2)))])


def test_dump_load_round_trip(tmp_path, rng):
    b = ProgramBuilder()
    X = b.symmetric(3)
    b.psd(X)
    b.equal(X.trace(), 1.0)
    C = rng.standard_normal((3, 3))
    b.minimize(((C + C.T) @ X).trace())
    prog = b.build()
    dump_program(prog, tmp_path / "p.txt")
    back = load_program(tmp_path / "p.txt")
    assert np.array_equal(back.c, prog.c)
    assert np.array_equal(back.A_eq, prog.A_eq) and np.array_equal(back.b_eq, prog.b_eq)
    for a, c in zip(back.blocks, prog.blocks):
        assert np.array_equal(a.F0, c.F0) and np.array_equal(a.F, c.F)

"""
Behavior cloning on a mass-spring-damper chain
==============================================

An LQR expert with full state access is imitated by an observer-based
controller that only sees velocities.  The passivity-constrained fit
carries a certificate; the plain ridge fit does not.
"""

import numpy as np

from dissipative_bc import (LearnerConfig, StateSpace, build_chain, learn_constrained,
                            learn_unconstrained, sample_chain, verify_passive)
from dissipative_bc.sim import (Noise, Policy, SimConfig, design_expert, design_observer,
                                draw_noise, evaluation_cost, generate_expert_data,
                                simulate_closed_loop)

rng = np.random.default_rng(4)

# nominal model for the observer, perturbed true plant for everything else
nominal, true = sample_chain(rng, (0.001, 10.0), (0.001, 1.0), delta=0.5)
nominal, true = build_chain(nominal), build_chain(true)

K = design_expert(true)
Ahat, Bhat = design_observer(nominal)

# a single noisy 10 s expert rollout: 1000 (estimate, action) pairs
data = generate_expert_data(true, K, (Ahat, Bhat), SimConfig(seed=1), n_trajectories=1)
print("pairs:", len(data))

res = learn_constrained(Ahat, Bhat, data, LearnerConfig(eta=0.05))
C_nc = learn_unconstrained(data, 0.05)
print("constrained objective %.4g, recheck margin %.2e"
      % (res.training_objective, res.certificate.lmi_margin))
print("ridge solution passive:", verify_passive(StateSpace(Ahat, Bhat, C_nc)).feasible)

# evaluate from a large initial condition with the same noise for everyone
cfg = SimConfig(seed=2)
noise = draw_noise(rng, 1, cfg.n_samples, 4, 4, 0.25, 0.25)
noise = Noise(noise.plant[0], noise.controller[0])
x0, xh0 = 20.0 * rng.standard_normal(8), np.zeros(8)
expert = simulate_closed_loop(true, Policy.expert(K, Ahat, Bhat), cfg, x0, xh0, noise)
for name, C in (("constrained", res.Chat), ("ridge", C_nc)):
    traj = simulate_closed_loop(true, StateSpace(Ahat, Bhat, C), cfg, x0, xh0, noise)
    print(f"{name:12s} bounded={traj.bounded} cost={evaluation_cost(expert, traj):.4g}")

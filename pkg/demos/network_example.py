"""
A nonlinear two-block network
=============================

Subsystem supply rates combine into a network supply rate; a controller
supply rate that passes the closed-loop test then constrains the learner.
"""

import numpy as np

from dissipative_bc import (GeneralQSR, LearnerConfig, StateSpace, learn_constrained,
                            network_qsr, stability_check, verify_qsr, verify_qsr_schur)
from dissipative_bc.systems import (EXAMPLE2_CONTROLLER_QSR, EXAMPLE2_G1_QSR, Passive,
                                    case_to_qsr, example2_plants)
from dissipative_bc.sim import (LQRWeights, SimConfig, ball_init, design_expert,
                                design_observer, generate_expert_data)

plants = example2_plants()
net = network_qsr([EXAMPLE2_G1_QSR, case_to_qsr(Passive(), 1, 1)], plants.H)
print("network Q:\n", net.Q, "\nS:\n", net.S, "\nR:\n", net.R)
print("linearized network dissipative:", verify_qsr(plants.true_linearized, net).feasible)

verdict = stability_check(net, EXAMPLE2_CONTROLLER_QSR)
print("closed loop certified: %s (alpha %.3g, margin %.3g)"
      % (verdict.stable, verdict.alpha, verdict.margin))

w = LQRWeights(E1=1000.0, F1=1.0, E2=10.0, F2=1.0)
K = design_expert(plants.true_linearized, w)
Ahat, Bhat = design_observer(plants.nominal, w)
cfg = SimConfig(duration=15.0, seed=3)
data = generate_expert_data(plants.true, K, (Ahat, Bhat), cfg, 2,
                            init_dist=ball_init(5.0), xhat_init=ball_init(0.25))

res = learn_constrained(Ahat, Bhat, data,
                        LearnerConfig(eta=0.05, supply_case=GeneralQSR(EXAMPLE2_CONTROLLER_QSR)))
ctrl = StateSpace(Ahat, Bhat, res.Chat)
print("learned controller meets its supply rate:",
      verify_qsr_schur(ctrl, EXAMPLE2_CONTROLLER_QSR).feasible)
print("gain norm: expert %.3g, learned %.3g" % (np.linalg.norm(K), np.linalg.norm(res.Chat)))

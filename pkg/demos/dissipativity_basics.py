"""
Checking dissipativity with the KYP lemma
=========================================

A first-order lag, a mass-spring-damper chain and a few supply rates.
"""

import numpy as np

from dissipative_bc import (BoundedGain, ChainParams, Passive, StateSpace, build_chain,
                            case_to_qsr, verify_passive, verify_qsr, verify_qsr_schur)

# 1/(s+1) is passive and has unit peak gain
lag = StateSpace([[-1.0]], [[1.0]], [[1.0]])
ver = verify_passive(lag)
print("lag passive:", ver.feasible, "P =", ver.certificate.P.ravel())

for gamma in (1.0, 0.5):
    qsr = case_to_qsr(BoundedGain(gamma), 1, 1)
    print(f"gain <= {gamma}: eq2 {verify_qsr(lag, qsr).feasible}, "
          f"eq4 {verify_qsr_schur(lag, qsr).feasible}")

# flipping the output sign destroys passivity
flipped = StateSpace([[-1.0]], [[1.0]], [[-1.0]])
print("flipped lag passive:", verify_passive(flipped).feasible)

# force in, velocity out: a chain of four masses is passive for any positive springs and dampers
chain = build_chain(ChainParams(masses=(1.0,) * 4, springs=(2.0, 0.5, 7.0, 1.0),
                                dampers=(0.1, 0.02, 0.5, 0.3)))
ver = verify_passive(chain)
print("chain passive:", ver.feasible, "min eig P = %.3g" % np.linalg.eigvalsh(ver.certificate.P)[0])
print("chain vs generic passive triple:", verify_qsr(chain, case_to_qsr(Passive(), 4, 4)).feasible)

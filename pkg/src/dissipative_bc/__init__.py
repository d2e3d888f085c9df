"""Dissipativity-constrained behavior cloning for observer-based output feedback.

Submodules
----------
numerics        eigenvalues, definiteness, Lyapunov and Riccati solvers
systems         state-space models, supply rates, interconnections, benchmarks
conic           a small dense interior-point SDP solver and program builder
certificates    KYP-type LMI checks and supply-rate stability tests
learner         constrained and unconstrained behavior cloning
sim             closed-loop simulation, expert data and evaluation cost
experiments     sweep harness and result files
"""
from .certificates import (Certificate, Verification, feasible_controller, stability_check,
                           synthesize_controller_qsr, verify_passive, verify_qsr,
                           verify_qsr_schur)
from .errors import (DimensionError, InfeasibleInput, InvalidCase, LearnerInfeasible,
                     NoStabilizingQSR, NumericalFailure)
from .learner import (Dataset, LearnedController, LearnerConfig, LMIRoute, learn_constrained,
                      learn_unconstrained)
from .systems import (BoundedGain, ChainParams, GeneralQSR, InteriorConicDegenerate,
                      InteriorConicNondegenerate, Passive, QSRTriple, StateSpace, build_chain,
                      case_to_qsr, network_qsr, sample_chain)

__version__ = "0.1.0"

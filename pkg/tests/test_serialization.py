import io

import numpy as np
import pytest

from dissipative_bc import serialization as ser
from dissipative_bc.certificates import Certificate
from dissipative_bc.learner import Dataset, LearnerConfig, LMIRoute
from dissipative_bc.sim import SimConfig, Trajectory
from dissipative_bc.systems import (BoundedGain, GeneralQSR, InteriorConicDegenerate,
                                    InteriorConicNondegenerate, Passive, QSRTriple, StateSpace)


def test_system_round_trip_bit_exact(rng):
    s = StateSpace(rng.standard_normal((3, 3)), rng.standard_normal((3, 2)),
                   rng.standard_normal((1, 3)), rng.standard_normal((1, 2)))
    back = ser.system_from_dict(ser.system_to_dict(s))
    for a, b in ((s.A, back.A), (s.B, back.B), (s.C, back.C), (s.D, back.D)):
        assert np.array_equal(a, b)


def test_system_header_checked():
    doc = ser.system_to_dict(StateSpace([[-1.0]], [[1.0]], [[1.0]]))
    doc["n"] = 2
    with pytest.raises(ser.FormatError):
        ser.system_from_dict(doc)
    with pytest.raises(ser.FormatError):
        ser.system_from_dict({"A": [[1.0]], "B": [[1.0]]})
    with pytest.raises(ser.FormatError):
        ser.system_from_dict({"A": "x", "B": [[1.0]], "C": [[1.0]]})


def test_builtin_plants():
    assert ser.system_from_dict({"builtin": "example2", "variant": "nominal"}).n == 3
    assert ser.system_from_dict({"builtin": "example2"}).n == 5
    with pytest.raises(ser.FormatError):
        ser.system_from_dict({"builtin": "example2", "variant": "other"})


@pytest.mark.parametrize("case", [Passive(), BoundedGain(2.0),
                                  InteriorConicNondegenerate(-1.0, 3.0),
                                  InteriorConicDegenerate(-0.5),
                                  GeneralQSR(QSRTriple([[-1.0]], [[0.5]], [[2.0]]))])
def test_supply_round_trip(case):
    back = ser.supply_from_dict(ser.supply_to_dict(case))
    assert type(back) is type(case)
    if isinstance(case, GeneralQSR):
        assert back.qsr == case.qsr
    else:
        assert back == case


def test_supply_errors():
    with pytest.raises(ser.FormatError):
        ser.supply_from_dict({"case": "bounded_gain"})
    with pytest.raises(ser.FormatError):
        ser.supply_from_dict({"case": "nope"})


def test_controller_certificate_dataset(rng):
    A, B, C = -np.eye(2), rng.standard_normal((2, 1)), rng.standard_normal((1, 2))
    ctrl = ser.controller_from_dict(ser.controller_to_dict(A, B, C))
    assert np.array_equal(ctrl.C, C) and np.array_equal(ctrl.B, B)
    cert = Certificate(np.eye(2), -1e-9, "eq2")
    back = ser.certificate_from_dict(ser.certificate_to_dict(cert))
    assert np.array_equal(back.P, cert.P) and back.which_lmi == "eq2"
    d = Dataset(rng.standard_normal((5, 2)), rng.standard_normal((5, 1)))
    d2 = ser.dataset_from_dict(ser.dataset_to_dict(d))
    assert np.array_equal(d.xhat, d2.xhat) and np.array_equal(d.u, d2.u)


def test_configs():
    cfg = LearnerConfig(eta=0.1, supply_case=BoundedGain(1.5), lmi_route="eq4")
    back = ser.learner_config_from_dict(ser.learner_config_to_dict(cfg))
    assert back.eta == 0.1 and back.lmi_route is LMIRoute.EQ4
    assert back.supply_case == BoundedGain(1.5)
    sim = SimConfig(duration=2.0, seed=4)
    assert ser.sim_config_from_dict(ser.sim_config_to_dict(sim)) == sim


def test_json_file_round_trip(tmp_path):
    ser.write_json({"a": [1.5, float("inf")]}, tmp_path / "sub" / "x.json")
    assert ser.read_json(tmp_path / "sub" / "x.json")["a"][1] == float("inf")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ser.FormatError):
        ser.read_json(tmp_path / "bad.json")
    with pytest.raises(OSError):
        ser.read_json(tmp_path / "missing.json")


def test_trajectory_round_trip(rng):
    t = np.arange(4) * 0.01
    traj = Trajectory(t, rng.standard_normal((4, 2)), rng.standard_normal((4, 3)),
                      rng.standard_normal((4, 1)), False)
    buf = io.StringIO()
    ser.write_trajectory(traj, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# bounded=false"
    assert lines[1] == "t,x0,x1,xhat0,xhat1,xhat2,u0"
    buf.seek(0)
    back = ser.read_trajectory(buf)
    assert not back.bounded
    for a, b in ((traj.x, back.x), (traj.xhat, back.xhat), (traj.u, back.u)):
        assert np.array_equal(a, b)

"""JSON documents for systems, supply rates, controllers and datasets, and the
delimited trajectory dump.

Matrices are nested lists of floats.  Python's ``repr`` of a float is the
shortest string that reads back to the same double, so a load after a dump
reproduces every array bit for bit.

Schemas (all keys required unless noted)::

    system      {"n", "m", "p" (optional header), "A", "B", "C", "D" (optional)}
    builtin     {"builtin": "example2", "variant": "true" | "true_linearized"
                 | "nominal", "coupling": "published" | "literal" (optional)}
    qsr         {"p", "m" (optional header), "Q", "S", "R"}
    supply      {"case": "passive"} | {"case": "bounded_gain", "gamma"}
                | {"case": "interior_conic", "a", "b"}
                | {"case": "interior_conic_degenerate", "d"}
                | {"case": "qsr", "Q", "S", "R"}
    observer    {"Ahat", "Bhat"}
    controller  {"Ahat", "Bhat", "Chat"}
    certificate {"P", "lmi_margin", "which_lmi"}
    dataset     {"xhat": [[...], ...], "u": [[...], ...]}
    learner     {"eta", "supply": <supply>, "lmi_route"}
    simulation  {"dt", "duration", "sample_period", "noise_std_controller",
                 "noise_std_plant", "seed", "x0", "xhat0"}
"""
import json
import math
from pathlib import Path

import numpy as np

from .certificates import Certificate
from .learner import Dataset, LearnerConfig
from .sim import SimConfig, Trajectory
from .systems import (BoundedGain, GeneralQSR, InteriorConicDegenerate,
                      InteriorConicNondegenerate, Passive, QSRTriple, StateSpace,
                      example2_plants)


class FormatError(ValueError):
    pass


def _arr(doc, key, where):
    try:
        a = np.asarray(doc[key], dtype=float)
    except KeyError:
        raise FormatError(f"{where}: missing key {key!r}") from None
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: {key!r} is not numeric: {exc}") from None
    return np.atleast_2d(a) if a.ndim < 2 else a


def _lists(a):
    return np.asarray(a, dtype=float).tolist()


def read_json(path):
    path = Path(path)
    try:
        with path.open() as fh:
            return json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def write_json(doc, path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as fh:
            json.dump(doc, fh, indent=1, allow_nan=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


# -- systems ------------------------------------------------------------------

def _check_header(doc, actual, where):
    for key, val in actual.items():
        if key in doc and int(doc[key]) != val:
            raise FormatError(f"{where}: header says {key}={doc[key]}, matrices give {val}")


def system_to_dict(sys: StateSpace):
    return {"n": sys.n, "m": sys.m, "p": sys.p, "A": _lists(sys.A), "B": _lists(sys.B),
            "C": _lists(sys.C), "D": _lists(sys.D)}


def system_from_dict(doc):
    if "builtin" in doc:
        return builtin_plant(doc)
    D = _arr(doc, "D", "system") if "D" in doc else None
    sys = StateSpace(_arr(doc, "A", "system"), _arr(doc, "B", "system"),
                     _arr(doc, "C", "system"), D)
    _check_header(doc, {"n": sys.n, "m": sys.m, "p": sys.p}, "system")
    return sys


def builtin_plant(doc):
    if doc["builtin"] != "example2":
        raise FormatError(f"unknown builtin plant {doc['builtin']!r}")
    plants = example2_plants(doc.get("coupling", "published"))
    variant = doc.get("variant", "true")
    table = {"true": plants.true, "true_linearized": plants.true_linearized,
             "nominal": plants.nominal}
    if variant not in table:
        raise FormatError(f"unknown example2 variant {variant!r}")
    return table[variant]


def qsr_to_dict(qsr: QSRTriple):
    return {"p": qsr.p, "m": qsr.m, "Q": _lists(qsr.Q), "S": _lists(qsr.S),
            "R": _lists(qsr.R)}


def qsr_from_dict(doc):
    qsr = QSRTriple(_arr(doc, "Q", "qsr"), _arr(doc, "S", "qsr"), _arr(doc, "R", "qsr"))
    _check_header(doc, {"p": qsr.p, "m": qsr.m}, "qsr")
    return qsr


def supply_to_dict(case):
    if isinstance(case, Passive):
        return {"case": "passive"}
    if isinstance(case, BoundedGain):
        return {"case": "bounded_gain", "gamma": case.gamma}
    if isinstance(case, InteriorConicNondegenerate):
        return {"case": "interior_conic", "a": case.a, "b": case.b}
    if isinstance(case, InteriorConicDegenerate):
        return {"case": "interior_conic_degenerate", "d": case.d}
    if isinstance(case, GeneralQSR):
        return {"case": "qsr", **qsr_to_dict(case.qsr)}
    raise FormatError(f"cannot serialize supply case {case!r}")


def supply_from_dict(doc):
    kind = doc.get("case")
    try:
        if kind == "passive":
            return Passive()
        if kind == "bounded_gain":
            return BoundedGain(float(doc["gamma"]))
        if kind == "interior_conic":
            return InteriorConicNondegenerate(float(doc["a"]), float(doc["b"]))
        if kind == "interior_conic_degenerate":
            return InteriorConicDegenerate(float(doc["d"]))
    except KeyError as exc:
        raise FormatError(f"supply case {kind!r}: missing key {exc}") from None
    if kind == "qsr" or (kind is None and {"Q", "S", "R"} <= set(doc)):
        return GeneralQSR(qsr_from_dict(doc))
    raise FormatError(f"unknown supply case {kind!r}")


# -- controllers --------------------------------------------------------------

def observer_to_dict(Ahat, Bhat):
    return {"Ahat": _lists(Ahat), "Bhat": _lists(Bhat)}


def observer_from_dict(doc):
    return _arr(doc, "Ahat", "observer"), _arr(doc, "Bhat", "observer")


def controller_to_dict(Ahat, Bhat, Chat):
    return {**observer_to_dict(Ahat, Bhat), "Chat": _lists(Chat)}


def controller_from_dict(doc):
    """A controller document as a strictly proper ``StateSpace``."""
    Ahat, Bhat = observer_from_dict(doc)
    return StateSpace(Ahat, Bhat, _arr(doc, "Chat", "controller"))


def certificate_to_dict(cert: Certificate):
    return {"P": _lists(cert.P), "lmi_margin": float(cert.lmi_margin),
            "which_lmi": cert.which_lmi}


def certificate_from_dict(doc):
    return Certificate(_arr(doc, "P", "certificate"), float(doc["lmi_margin"]),
                       doc["which_lmi"])


def dataset_to_dict(data: Dataset):
    return {"xhat": _lists(data.xhat), "u": _lists(data.u)}


def dataset_from_dict(doc):
    return Dataset(_arr(doc, "xhat", "dataset"), _arr(doc, "u", "dataset"))


def learner_config_to_dict(cfg: LearnerConfig):
    return {"eta": cfg.eta, "supply": supply_to_dict(cfg.supply_case),
            "lmi_route": cfg.lmi_route.value}


def learner_config_from_dict(doc):
    supply = supply_from_dict(doc.get("supply", {"case": "passive"}))
    return LearnerConfig(eta=float(doc.get("eta", 0.05)), supply_case=supply,
                         lmi_route=doc.get("lmi_route", "auto"))


_SIM_KEYS = ("dt", "duration", "sample_period", "noise_std_controller",
             "noise_std_plant", "seed")


def sim_config_to_dict(cfg: SimConfig):
    return {k: getattr(cfg, k) for k in _SIM_KEYS}


def sim_config_from_dict(doc):
    kwargs = {k: doc[k] for k in _SIM_KEYS if k in doc}
    if "seed" in kwargs:
        kwargs["seed"] = int(kwargs["seed"])
    return SimConfig(**kwargs)


# -- trajectories -------------------------------------------------------------

def trajectory_header(n, nhat, m):
    cols = ["t"] + [f"x{i}" for i in range(n)] + [f"xhat{i}" for i in range(nhat)] \
        + [f"u{i}" for i in range(m)]
    return ",".join(cols)


def write_trajectory(traj: Trajectory, fh):
    """Comma-separated rows ``t, x..., xhat..., u...`` after a header line.

    A comment line ``# bounded=<true|false>`` precedes the header.
    """
    n, nhat, m = traj.x.shape[1], traj.xhat.shape[1], traj.u.shape[1]
    fh.write(f"# bounded={'true' if traj.bounded else 'false'}\n")
    fh.write(trajectory_header(n, nhat, m) + "\n")
    rows = np.hstack([traj.times[:, None], traj.x, traj.xhat, traj.u])
    for row in rows:
        fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_trajectory(fh):
    first = fh.readline().strip()
    if not first.startswith("# bounded="):
        raise FormatError("trajectory dump must start with '# bounded=...'")
    bounded = first.split("=", 1)[1] == "true"
    cols = fh.readline().strip().split(",")
    n = sum(c.startswith("x") and not c.startswith("xhat") for c in cols)
    nhat = sum(c.startswith("xhat") for c in cols)
    data = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    data = np.asarray(data, dtype=float).reshape(-1, len(cols))
    return Trajectory(data[:, 0], data[:, 1:1 + n], data[:, 1 + n:1 + n + nhat],
                      data[:, 1 + n + nhat:], bounded)


def format_cost(c):
    return "inf" if math.isinf(c) else repr(float(c))

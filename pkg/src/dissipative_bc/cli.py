"""Command-line entry point, run as ``python -m dissipative_bc``.

Exit status is 0 on success, 2 when a certificate or learning problem is
infeasible, and 1 on any other error.
"""
import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import serialization as ser
from .certificates import verify_passive, verify_qsr, verify_qsr_schur
from .errors import LearnerInfeasible
from .experiments import (ExperimentConfig, chain_config, emit_results, network_config,
                          run_experiment)
from .learner import LMIRoute, learn_constrained, learn_unconstrained, objective
from .sim import Noise, simulate_closed_loop
from .systems import GeneralQSR, Passive, case_to_qsr

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


def _emit(doc, out):
    if out is None:
        json.dump(doc, sys.stdout, indent=1)
        sys.stdout.write("\n")
    else:
        ser.write_json(doc, out)


def cmd_verify(args):
    sys_ = ser.system_from_dict(ser.read_json(args.system))
    case = ser.supply_from_dict(ser.read_json(args.qsr))
    lmi = args.lmi
    if lmi == "auto":
        lmi = "eq1" if isinstance(case, Passive) else "eq2"
    if lmi == "eq1":
        if not isinstance(case, Passive):
            raise ValueError("eq1 only checks passivity")
        ver = verify_passive(sys_)
    else:
        qsr = case_to_qsr(case, sys_.p, sys_.m)
        ver = verify_qsr(sys_, qsr) if lmi == "eq2" else verify_qsr_schur(sys_, qsr)
    doc = {"feasible": ver.feasible, "margin": ver.margin, "message": ver.message,
           "certificate": None if ver.certificate is None
           else ser.certificate_to_dict(ver.certificate)}
    _emit(doc, args.out)
    return EXIT_OK if ver.feasible else EXIT_INFEASIBLE


def cmd_learn(args):
    Ahat, Bhat = ser.observer_from_dict(ser.read_json(args.observer))
    data = ser.dataset_from_dict(ser.read_json(args.dataset))
    cfg = ser.learner_config_from_dict(ser.read_json(args.config))
    cert_doc = None
    if cfg.lmi_route is LMIRoute.NONE:
        Chat = learn_unconstrained(data, cfg.eta)
        obj = objective(Chat, data, cfg.eta)
    else:
        try:
            res = learn_constrained(Ahat, Bhat, data, cfg)
        except LearnerInfeasible as exc:
            print(f"infeasible: {exc}; diagnosis {exc.diagnosis}", file=sys.stderr)
            return EXIT_INFEASIBLE
        Chat, obj = res.Chat, res.training_objective
        cert_doc = ser.certificate_to_dict(res.certificate)
    ctrl = ser.controller_to_dict(Ahat, Bhat, Chat)
    if args.out is None:
        _emit({"controller": ctrl, "certificate": cert_doc, "training_objective": obj}, None)
    else:
        out = Path(args.out)
        ser.write_json(ctrl, out)
        if cert_doc is not None:
            ser.write_json({**cert_doc, "training_objective": obj},
                           out.with_name(out.stem + ".certificate.json"))
    return EXIT_OK


def cmd_simulate(args):
    plant = ser.system_from_dict(ser.read_json(args.plant))
    ctrl = ser.controller_from_dict(ser.read_json(args.controller))
    doc = ser.read_json(args.config)
    cfg = ser.sim_config_from_dict(doc)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    x0 = np.asarray(doc.get("x0", np.zeros(plant.n)), dtype=float)
    xh0 = np.asarray(doc.get("xhat0", np.zeros(ctrl.n)), dtype=float)
    rng = np.random.default_rng(cfg.seed)
    N, m, p = cfg.n_samples, ctrl.p, ctrl.m
    noise = Noise(cfg.noise_std_plant * rng.standard_normal((N, m)),
                  cfg.noise_std_controller * rng.standard_normal((N, p)))
    traj = simulate_closed_loop(plant, ctrl, cfg, x0, xh0, noise)
    if args.out is None:
        ser.write_trajectory(traj, sys.stdout)
    else:
        try:
            with open(args.out, "w") as fh:
                ser.write_trajectory(traj, fh)
        except OSError as exc:
            raise OSError(f"cannot write {args.out}: {exc.strerror}") from exc
    return EXIT_OK


def experiment_config(which, path=None, seed=None):
    """Preset for ``which`` overlaid with the keys of the JSON file at ``path``."""
    doc = {} if path is None else ser.read_json(path)
    if doc.get("experiment", which) != which:
        raise ValueError(f"config is for experiment {doc['experiment']!r}, not {which!r}")
    doc.pop("experiment", None)
    if which == "chain":
        base = chain_config(doc.pop("sweep", "n_trajectories"))
    else:
        base = network_config()
    merged = {**base.to_dict(), **doc}
    if seed is not None:
        merged["seed"] = seed
    return ExperimentConfig.from_dict(merged)


def cmd_experiment(args):
    cfg = experiment_config(args.which, args.config, args.seed)
    reports = run_experiment(cfg, jobs=args.jobs)
    out = Path(args.out or f"results_{args.which}")
    csv_path, json_path = emit_results(reports, out)
    ser.write_json(cfg.to_dict(), out / "config.json")
    n_err = sum(r.error is not None for r in reports)
    print(f"wrote {csv_path} and {json_path} ({len(reports)} trials, {n_err} errors)")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="python -m dissipative_bc",
                                 description="Dissipativity-constrained behavior cloning.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, jobs=False):
        p.add_argument("--out", help="output file (or directory for experiments)")
        p.add_argument("--seed", type=int, help="override the configured seed")
        if jobs:
            p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = sub.add_parser("verify", help="check a system against a supply rate")
    p.add_argument("system")
    p.add_argument("qsr")
    p.add_argument("--lmi", choices=("auto", "eq1", "eq2", "eq4"), default="auto")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("learn", help="fit a feedback matrix to expert data")
    p.add_argument("observer")
    p.add_argument("dataset")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("simulate", help="simulate a plant with an observer controller")
    p.add_argument("plant")
    p.add_argument("controller")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="run a benchmark sweep")
    p.add_argument("which", choices=("chain", "network"))
    p.add_argument("config", nargs="?")
    common(p, jobs=True)
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; 2 is reserved for infeasibility here
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.verbose:
            raise
        return EXIT_ERROR

"""Sweep harness for the spring-mass chain and the nonlinear network benchmark.

Randomness
----------
Every random draw comes from ``SeedSequence(master_seed, spawn_key=key)``:

* ``(0, system)`` -- chain parameters (nominal values and perturbation factors),
* ``(1, system, j)`` -- initial conditions and noise of training rollout ``j``,
* ``(2, system, j)`` -- initial conditions and noise of evaluation cell ``j``.

Training sets for a trajectory-count sweep are prefixes of one pool of
rollouts, and evaluation cells are shared by the expert and every learner,
so results do not depend on scheduling or on ``jobs``.
"""
import csv
import hashlib
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .certificates import stability_check, synthesize_controller_qsr
from .learner import (LearnerConfig, LMIRoute, learn_constrained,
                      learn_unconstrained, objective)
from .sim import (LQRWeights, Noise, Policy, SimConfig, dataset_from_rollouts, design_expert,
                  design_observer, evaluation_cost, simulate_batch)
from .systems import (EXAMPLE2_CONTROLLER_QSR, EXAMPLE2_G1_QSR, GeneralQSR, Passive,
                      build_chain, case_to_qsr, example2_plants, network_qsr, sample_chain)

log = logging.getLogger(__name__)

LEARNERS = ("qsr_constrained", "unconstrained")
CSV_COLUMNS = ("experiment", "sweep_value", "system_id", "learner", "cost", "stable", "seed")


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep.  ``init_*`` values are a standard deviation for
    ``init_kind="gaussian"`` and a radius for ``"ball"``."""

    experiment: str = "chain"
    sweep: str = "n_trajectories"
    grid: Tuple = (1, 2, 5, 10, 25, 50)
    n_systems: int = 50
    n_eval_trajectories: int = 100
    n_train_trajectories: int = 25
    k_range: Tuple[float, float] = (0.001, 10.0)
    c_range: Tuple[float, float] = (0.001, 1.0)
    delta: float = 0.5
    n_masses: int = 4
    weights: LQRWeights = LQRWeights()
    eta: float = 0.05
    seed: int = 0
    dt: float = 1e-3
    sample_period: float = 0.01
    train_duration: float = 10.0
    eval_duration: float = 10.0
    train_noise: float = 0.25
    eval_noise: float = 0.25
    init_kind: str = "gaussian"
    train_init: float = 1.0
    eval_init: float = 20.0
    train_xhat_init: float = 0.0
    eval_xhat_init: float = 0.0
    coupling: str = "published"
    controller_qsr: str = "published"

    def __post_init__(self):
        if self.experiment not in ("chain", "network"):
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.sweep not in ("n_trajectories", "uncertainty"):
            raise ValueError(f"unknown sweep variable {self.sweep!r}")
        if self.experiment == "network" and self.sweep != "n_trajectories":
            raise ValueError("the network experiment only sweeps the trajectory count")
        if not self.grid:
            raise ValueError("sweep grid is empty")
        object.__setattr__(self, "grid", tuple(self.grid))
        if self.sweep == "n_trajectories" and any(int(g) != g or g < 1 for g in self.grid):
            raise ValueError("trajectory counts must be positive integers")
        if self.sweep == "uncertainty" and any(g < 0 for g in self.grid):
            raise ValueError("uncertainty levels must be nonnegative")
        if min(self.n_systems, self.n_eval_trajectories, self.n_train_trajectories) < 1:
            raise ValueError("counts must be positive")
        if self.init_kind not in ("gaussian", "ball"):
            raise ValueError(f"unknown init_kind {self.init_kind!r}")
        if self.controller_qsr not in ("published", "synthesized"):
            raise ValueError(f"unknown controller_qsr {self.controller_qsr!r}")
        if isinstance(self.weights, dict):
            object.__setattr__(self, "weights", LQRWeights(**self.weights))

    def to_dict(self):
        d = asdict(self)
        d["grid"], d["k_range"], d["c_range"] = list(self.grid), list(self.k_range), \
            list(self.c_range)
        return d

    @staticmethod
    def from_dict(doc):
        doc = dict(doc)
        unknown = set(doc) - set(ExperimentConfig.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        for k in ("grid", "k_range", "c_range"):
            if k in doc:
                doc[k] = tuple(doc[k])
        return ExperimentConfig(**doc)


def chain_config(sweep="n_trajectories", **overrides):
    """Defaults for the chain benchmark; ``sweep="uncertainty"`` switches to
    the wide-range parameter sweep at 25 training trajectories."""
    base = ExperimentConfig(experiment="chain", sweep=sweep)
    if sweep == "uncertainty":
        base = replace(base, grid=(0.0, 0.25, 0.5, 0.75, 1.0), n_systems=40,
                       k_range=(0.001, 100.0), c_range=(0.001, 100.0))
    return replace(base, **overrides)


def network_config(**overrides):
    base = ExperimentConfig(
        experiment="network", sweep="n_trajectories", grid=(1, 2, 5, 10, 15), n_systems=1,
        n_eval_trajectories=25, weights=LQRWeights(E1=1000.0, F1=1.0, E2=10.0, F2=1.0),
        train_duration=15.0, eval_duration=15.0, train_noise=0.25, eval_noise=1.0,
        init_kind="ball", train_init=5.0, eval_init=20.0, train_xhat_init=0.25,
        eval_xhat_init=1.0)
    return replace(base, **overrides)


@dataclass
class TrialReport:
    """One evaluation trajectory of one learner on one system."""

    experiment: str
    sweep_value: float
    system_id: int
    learner: str
    cost: float
    stable: bool
    seed: int
    trajectory: int = 0
    noise_hash: str = ""
    certificate_margin: Optional[float] = None
    training_objective: Optional[float] = None
    error: Optional[str] = field(default=None)


# -- randomness ---------------------------------------------------------------

def _seq(master, *key):
    return np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in key))


def _cell_seed(master, *key):
    return int(_seq(master, *key).generate_state(1)[0])


def _draw(kind, scale, rng, n):
    if scale == 0:
        return np.zeros(n)
    if kind == "gaussian":
        return scale * rng.standard_normal(n)
    d = rng.standard_normal(n)
    d /= np.linalg.norm(d)
    return scale * d * rng.uniform() ** (1.0 / n)


def draw_cells(config: ExperimentConfig, stage, system_id, count, n, nhat, m, p, sim):
    """Initial states and held noise for ``count`` cells, each from its own stream."""
    if stage == 1:
        scale, xscale, std = config.train_init, config.train_xhat_init, config.train_noise
    else:
        scale, xscale, std = config.eval_init, config.eval_xhat_init, config.eval_noise
    N = sim.n_samples
    x0, xh0 = np.empty((count, n)), np.empty((count, nhat))
    plant, ctrl = np.empty((count, N, m)), np.empty((count, N, p))
    seeds = []
    for j in range(count):
        rng = np.random.default_rng(_seq(config.seed, stage, system_id, j))
        x0[j] = _draw(config.init_kind, scale, rng, n)
        xh0[j] = _draw(config.init_kind, xscale, rng, nhat)
        plant[j] = std * rng.standard_normal((N, m))
        ctrl[j] = std * rng.standard_normal((N, p))
        seeds.append(_cell_seed(config.seed, stage, system_id, j))
    return x0, xh0, Noise(plant, ctrl), seeds


def cell_hash(x0, xh0, noise: Noise, j):
    h = hashlib.sha256()
    for a in (x0[j], xh0[j], noise.plant[j], noise.controller[j]):
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()[:16]


def _subset(noise: Noise, idx):
    return Noise(noise.plant[idx], noise.controller[idx])


# -- one system ---------------------------------------------------------------

@dataclass
class _Setup:
    true_plant: object
    design_plant: object     # linear model for the expert's Riccati design
    nominal: object
    K: np.ndarray
    observer: tuple
    learner_config: LearnerConfig


def _train(setup: _Setup, data, eta):
    """Both learners on one dataset; values are ``(Chat, margin, objective)`` or
    an error string."""
    Ah, Bh = setup.observer
    out = {}
    try:
        res = learn_constrained(Ah, Bh, data, setup.learner_config)
        out["qsr_constrained"] = (res.Chat, res.certificate.lmi_margin, res.training_objective)
    except Exception as exc:           # recorded per trial, run continues
        out["qsr_constrained"] = f"{type(exc).__name__}: {exc}"
    try:
        Cu = learn_unconstrained(data, eta)
        out["unconstrained"] = (Cu, None, objective(Cu, data, eta))
    except Exception as exc:
        out["unconstrained"] = f"{type(exc).__name__}: {exc}"
    c, u = out["qsr_constrained"], out["unconstrained"]
    if not isinstance(c, str) and not isinstance(u, str):
        if c[2] < u[2] - 1e-8 * max(1.0, abs(u[2])):
            warnings.warn(f"constrained objective {c[2]:.6g} below unconstrained {u[2]:.6g}",
                          stacklevel=2)
    return out


def _evaluate(config, setup, sweep_value, system_id, trained, cells, expert_trajs):
    x0, xh0, noise, seeds = cells
    Ah, Bh = setup.observer
    nplant = x0.shape[1]
    reports = []
    for learner in LEARNERS:
        res = trained[learner]
        if isinstance(res, str):
            for j, s in enumerate(seeds):
                reports.append(TrialReport(config.experiment, sweep_value, system_id, learner,
                                           math.inf, False, s, j, cell_hash(x0, xh0, noise, j),
                                           error=res))
            continue
        Chat, margin, obj = res
        sim = _sim(config, "eval")
        trajs = simulate_batch(setup.true_plant, Policy.observer_feedback(Ah, Bh, Chat, nplant),
                               sim, x0, xh0, noise)
        for j, (te, tl) in enumerate(zip(expert_trajs, trajs)):
            try:
                cost, err = evaluation_cost(te, tl), None
            except ValueError as exc:
                cost, err = math.inf, str(exc)
            reports.append(TrialReport(config.experiment, sweep_value, system_id, learner,
                                       cost, math.isfinite(cost), seeds[j], j,
                                       cell_hash(x0, xh0, noise, j), margin, obj, err))
    return reports


def _sim(config, stage):
    if stage == "train":
        return SimConfig(config.dt, config.train_duration, config.sample_period,
                         config.train_noise, config.train_noise, config.seed)
    return SimConfig(config.dt, config.eval_duration, config.sample_period,
                     config.eval_noise, config.eval_noise, config.seed)


def _chain_setup(config, system_id, delta):
    rng = np.random.default_rng(_seq(config.seed, 0, system_id))
    nom, tru = sample_chain(rng, config.k_range, config.c_range, delta, config.n_masses)
    gn, gt = build_chain(nom), build_chain(tru)
    K = design_expert(gt, config.weights)
    observer = design_observer(gn, config.weights)
    lc = LearnerConfig(eta=config.eta, supply_case=Passive(), lmi_route=LMIRoute.EQ2)
    return _Setup(gt, gt, gn, K, observer, lc)


def controller_supply(config):
    """Controller supply rate for the network benchmark."""
    if config.controller_qsr == "published":
        return EXAMPLE2_CONTROLLER_QSR
    plants = example2_plants(config.coupling)
    plant_qsr = network_qsr([EXAMPLE2_G1_QSR, case_to_qsr(Passive(), 1, 1)], plants.H)
    return synthesize_controller_qsr(plant_qsr)


def _network_setup(config):
    plants = example2_plants(config.coupling)
    K = design_expert(plants.true_linearized, config.weights)
    observer = design_observer(plants.nominal, config.weights)
    lc = LearnerConfig(eta=config.eta, supply_case=GeneralQSR(controller_supply(config)),
                       lmi_route=LMIRoute.EQ4)
    return _Setup(plants.true, plants.true_linearized, plants.nominal, K, observer, lc)


def _dims(setup):
    Ah, Bh = setup.observer
    return setup.design_plant.n, Ah.shape[0], setup.K.shape[0], Bh.shape[1]


def _expert(setup, config, cells):
    x0, xh0, noise, _ = cells
    Ah, Bh = setup.observer
    return simulate_batch(setup.true_plant, Policy.expert(setup.K, Ah, Bh),
                          _sim(config, "eval"), x0, xh0, noise)


def _error_rows(config, sweep_value, system_id, message):
    return [TrialReport(config.experiment, sweep_value, system_id, learner, math.inf, False,
                        _cell_seed(config.seed, 2, system_id, j), j, error=message)
            for learner in LEARNERS for j in range(config.n_eval_trajectories)]


def run_system(config: ExperimentConfig, system_id: int) -> List[TrialReport]:
    """Every sweep point for one system (or one replicate of the network)."""
    if config.sweep == "uncertainty":
        points = [(float(d), int(config.n_train_trajectories), float(d)) for d in config.grid]
    else:
        points = [(config.delta, int(g), int(g)) for g in config.grid]
    reports = []
    setup = cells = expert = pool = None
    prev_delta = None
    for delta, n_train, sweep_value in points:
        try:
            if delta != prev_delta:
                setup = _chain_setup(config, system_id, delta) if config.experiment == "chain" \
                    else _network_setup(config)
                n, nh, m, p = _dims(setup)
                cells = draw_cells(config, 2, system_id, config.n_eval_trajectories,
                                   n, nh, m, p, _sim(config, "eval"))
                expert = _expert(setup, config, cells)
                n_pool = max(pt[1] for pt in points)
                tx0, txh0, tnoise, _ = draw_cells(config, 1, system_id, n_pool,
                                                  n, nh, m, p, _sim(config, "train"))
                Ah, Bh = setup.observer
                pool = simulate_batch(setup.true_plant, Policy.expert(setup.K, Ah, Bh),
                                      _sim(config, "train"), tx0, txh0, tnoise)
                prev_delta = delta
            data = dataset_from_rollouts(pool[:n_train])
            trained = _train(setup, data, config.eta)
            reports += _evaluate(config, setup, sweep_value, system_id, trained, cells, expert)
        except Exception as exc:
            log.warning("system %d, sweep value %s failed: %s", system_id, sweep_value, exc)
            prev_delta = None
            reports += _error_rows(config, sweep_value, system_id,
                                   f"{type(exc).__name__}: {exc}")
    return reports


def run_experiment(config: ExperimentConfig, jobs=1) -> List[TrialReport]:
    ids = range(config.n_systems)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run_system, [config] * len(ids), ids))
    else:
        parts = [run_system(config, i) for i in ids]
    order = {v: k for k, v in enumerate(config.grid)}
    rank = {name: k for k, name in enumerate(LEARNERS)}
    reports = [r for part in parts for r in part]
    reports.sort(key=lambda r: (order.get(r.sweep_value, len(order)), r.system_id,
                                rank[r.learner], r.trajectory))
    return reports


def run_experiment_chain(config: ExperimentConfig, jobs=1):
    if config.experiment != "chain":
        raise ValueError("expected a chain experiment config")
    return run_experiment(config, jobs)


def run_experiment_network(config: ExperimentConfig, jobs=1):
    if config.experiment != "network":
        raise ValueError("expected a network experiment config")
    return run_experiment(config, jobs)


# -- results ------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    return "inf" if math.isinf(v) and v > 0 else repr(v)


def _quantile(sorted_vals, q):
    """Linear-interpolation quantile that tolerates ``inf`` entries."""
    pos = q * (len(sorted_vals) - 1)
    lo, hi = int(math.floor(pos)), int(math.ceil(pos))
    a, b = sorted_vals[lo], sorted_vals[hi]
    if lo == hi or a == b:
        return a
    if math.isinf(b):
        return math.inf
    return a + (b - a) * (pos - lo)


def aggregate(rows):
    """Per ``(sweep_value, learner)``: median and IQR of cost and stability rate.

    ``rows`` are ``(sweep_value, learner, cost, stable)`` tuples with
    ``sweep_value`` already formatted as text.
    """
    groups = {}
    for sv, learner, cost, stable in rows:
        groups.setdefault((sv, learner), []).append((cost, stable))
    points = []
    for (sv, learner), vals in groups.items():
        costs = sorted(c for c, _ in vals)
        q25, med, q75 = (_quantile(costs, q) for q in (0.25, 0.5, 0.75))
        iqr = math.inf if math.isinf(q75) else q75 - q25
        points.append({"sweep_value": sv, "learner": learner, "n": len(vals),
                       "median": _fmt(med), "q25": _fmt(q25), "q75": _fmt(q75),
                       "iqr": _fmt(iqr),
                       "stability_rate": sum(s for _, s in vals) / len(vals)})
    return points


def emit_results(reports: List[TrialReport], path):
    """Write ``trials.csv`` and ``summary.json`` into directory ``path``."""
    if not reports:
        raise ValueError("no reports to write")
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with (out / "trials.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in reports:
                w.writerow([r.experiment, _fmt(r.sweep_value), r.system_id, r.learner,
                            _fmt(r.cost), "true" if r.stable else "false", r.seed])
        summary = {
            "experiment": reports[0].experiment,
            "points": aggregate([(_fmt(r.sweep_value), r.learner, r.cost, r.stable)
                                 for r in reports]),
            "n_errors": sum(r.error is not None for r in reports),
        }
        with (out / "summary.json").open("w") as fh:
            json.dump(summary, fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc.strerror}") from exc
    return out / "trials.csv", out / "summary.json"


def read_trials(path):
    """Parse a ``trials.csv`` back into ``(sweep_value, learner, cost, stable)`` rows."""
    with Path(path).open(newline="") as fh:
        rd = csv.DictReader(fh)
        return [(row["sweep_value"], row["learner"], float(row["cost"]),
                 row["stable"] == "true") for row in rd]


def certified_stable(config: ExperimentConfig):
    """Closed-loop stability verdict from the two supply rates (network only)."""
    plants = example2_plants(config.coupling)
    plant_qsr = network_qsr([EXAMPLE2_G1_QSR, case_to_qsr(Passive(), 1, 1)], plants.H)
    return stability_check(plant_qsr, controller_supply(config))

"""Simulation driver: seeded scenario, global-round loop, metrics and sweeps.

Every round: fading draw, local training from the broadcast model, range
scales reported to the server, allocation by the chosen scheme, quantized
upload with the allocated widths, aggregation, and the simulated clock
advanced by the round latency (the broadcast itself is free).
"""
from __future__ import annotations

import copy
import csv
import dataclasses
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .channel import PhysicsConfig, dbm_per_hz_to_watt_per_hz, sample_channels
from .errors import ConfigError
from .fl import (MLP, Dataset, TrainerConfig, aggregate, aggregation_weights, epsilon_schedule,
                 evaluate, load_mnist, local_update, make_synthetic, partition)
from .quant import quantize
from .roundopt import (RoundProblem, baseline_equal_energy, baseline_equal_slots,
                       baseline_fixed_bits, kkt_residuals, solve_round)
from .scenario import UserPopulation, draw_profiles

log = logging.getLogger(__name__)

SCHEMES = ("proposed", "fixed_bits", "equal_slots", "equal_energy", "lossless")
LOSSLESS_BITS = 32
_OVERRIDABLE = {"c", "workload_bits", "f_max", "E_max", "distance"}


@dataclass
class EpsilonSpec:
    kind: str = "constant"
    eps0: float = 0.01
    eps_end: float | None = None
    ratio: float | None = None

    def schedule(self, rounds: int):
        return epsilon_schedule(self.kind, self.eps0, self.eps_end, rounds, self.ratio)


@dataclass
class DatasetSpec:
    kind: str = "synthetic"
    path: str | None = None
    n_train: int = 3000
    n_test: int = 1000


@dataclass
class SimConfig:
    n_users: int = 10
    rounds: int = 20
    seed: int = 0
    scheme: str = "proposed"
    fixed_bits: int = 16
    b_cap: int = 40
    partition: str = "iid"
    samples_per_user: int = 200
    labels_per_user: int = 5
    model_sizes: tuple[int, ...] = (784, 30, 10)
    user_overrides: dict = field(default_factory=dict)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    population: UserPopulation = field(default_factory=UserPopulation)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    epsilon: EpsilonSpec = field(default_factory=EpsilonSpec)
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    csv_path: str | None = None
    diagnostics_path: str | None = None

    def validate(self) -> "SimConfig":
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        if self.n_users < 1 or self.rounds < 1:
            raise ConfigError("n_users and rounds must be >= 1")
        if self.dataset.kind not in ("synthetic", "mnist"):
            raise ConfigError("dataset.kind must be 'synthetic' or 'mnist'")
        for uid, fields in self.user_overrides.items():
            if not 0 <= int(uid) < self.n_users:
                raise ConfigError(f"user override for unknown user {uid}")
            bad = set(fields) - _OVERRIDABLE
            if bad:
                raise ConfigError(f"cannot override user fields {sorted(bad)}")
        if self.model_sizes[-1] < 2:
            raise ConfigError("model needs at least two output classes")
        return self


@dataclass
class RoundMetrics:
    round: int
    sim_time: float
    round_latency: float
    l_c: float
    epsilon: float
    c3_slack: float
    train_loss: float
    test_accuracy: float
    B: np.ndarray
    l_up: np.ndarray
    E: np.ndarray
    f: np.ndarray

    @property
    def avg_bits(self) -> float:
        return float(np.mean(self.B))

    def row(self) -> dict[str, Any]:
        out = {k: getattr(self, k) for k in ("round", "sim_time", "round_latency", "l_c", "epsilon",
                                             "c3_slack", "train_loss", "test_accuracy")}
        out["avg_bits"] = self.avg_bits
        for name in ("B", "l_up", "E", "f"):
            for n, v in enumerate(getattr(self, name)):
                out[f"{name}_{n}"] = int(v) if name == "B" else float(v)
        return out


# ---------------------------------------------------------------- config I/O

class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-6`` (no dot) as a float."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?(?:[eE][-+]?[0-9]+)$|^[-+]?\.[0-9_]+(?:[eE][-+]?[0-9]+)?$"""),
    list("-+0123456789."))


_NESTED = {"physics": PhysicsConfig, "population": UserPopulation, "trainer": TrainerConfig,
           "epsilon": EpsilonSpec, "dataset": DatasetSpec}


def _build(cls, values: dict):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**values)


def config_from_dict(data: dict | None) -> SimConfig:
    data = copy.deepcopy(data or {})
    try:
        kwargs = {}
        for key, value in data.items():
            if key in _NESTED:
                value = dict(value or {})
                if key == "physics" and "N0_dbm_per_hz" in value:
                    value["N0"] = dbm_per_hz_to_watt_per_hz(float(value.pop("N0_dbm_per_hz")))
                for k in ("c_range", "distance_range"):
                    if k in value:
                        value[k] = tuple(value[k])
                kwargs[key] = _build(_NESTED[key], value)
            elif key == "model_sizes":
                kwargs[key] = tuple(int(v) for v in value)
            else:
                kwargs[key] = value
        return _build(SimConfig, kwargs).validate()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def config_to_dict(cfg: SimConfig) -> dict:
    def plain(v):
        if isinstance(v, tuple):
            return list(v)
        return v
    out = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        out[f.name] = ({k: plain(x) for k, x in dataclasses.asdict(v).items()}
                       if dataclasses.is_dataclass(v) else plain(v))
    return out


def _set_path(tree: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    for k in keys[:-1]:
        tree = tree.setdefault(k, {})
    tree[keys[-1]] = value


def load_config(path=None, overrides=(), preset: str | None = None) -> SimConfig:
    """Read a YAML config, then apply ``key.sub=value`` overrides (YAML-typed).

    ``preset="table1"`` names the standard simulation defaults, which are also what
    an empty file gives.
    """
    if preset not in (None, "table1"):
        raise ConfigError(f"unknown preset {preset!r}")
    data: dict = {}
    if path is not None:
        try:
            data = yaml.load(Path(path).read_text(), Loader=_Loader) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        _set_path(data, key.strip(), yaml.load(raw, Loader=_Loader))
    return config_from_dict(data)


# ---------------------------------------------------------------- the simulation

@dataclass
class ExperimentResult:
    config: SimConfig
    metrics: list[RoundMetrics]
    gains: list[np.ndarray]

    @property
    def final_accuracy(self) -> float:
        return self.metrics[-1].test_accuracy

    @property
    def avg_latency(self) -> float:
        return float(np.mean([m.round_latency for m in self.metrics]))

    @property
    def avg_bits(self) -> float:
        return float(np.mean([m.avg_bits for m in self.metrics]))


def _streams(seed: int, n_users: int):
    root = np.random.SeedSequence(seed)
    placement, fading, data, init, train, quant = root.spawn(6)
    return {
        "placement": np.random.default_rng(placement),
        "fading": np.random.default_rng(fading),
        "data": np.random.default_rng(data),
        "init": np.random.default_rng(init),
        "train": [np.random.default_rng(s) for s in train.spawn(n_users)],
        "quant": [np.random.default_rng(s) for s in quant.spawn(n_users)],
    }


def _load_data(cfg: SimConfig, rng) -> tuple[Dataset, Dataset]:
    if cfg.dataset.kind == "mnist":
        return load_mnist(cfg.dataset.path)
    n_train = max(cfg.dataset.n_train, cfg.n_users * cfg.samples_per_user)
    return make_synthetic(n_train, cfg.dataset.n_test, rng, n_classes=cfg.model_sizes[-1],
                          dim=cfg.model_sizes[0])


def allocate(cfg: SimConfig, problem: RoundProblem):
    """Allocation for the configured scheme; returns ``(alloc, diagnostics)``."""
    if cfg.scheme == "proposed":
        alloc, cont, mult = solve_round(problem)
        report = kkt_residuals(cont, mult, problem)
        diag = {"continuous_B": cont.B.tolist(), "continuous_latency": cont.round_latency,
                "multipliers": {k: np.asarray(v).tolist() for k, v in dataclasses.asdict(mult).items()},
                "kkt": report.residuals, "kkt_max": report.max}
        return alloc, diag
    if cfg.scheme == "fixed_bits":
        return baseline_fixed_bits(problem, cfg.fixed_bits), {}
    if cfg.scheme == "lossless":
        return baseline_fixed_bits(problem, LOSSLESS_BITS), {}
    if cfg.scheme == "equal_slots":
        return baseline_equal_slots(problem), {}
    return baseline_equal_energy(problem), {}


def run_experiment(cfg: SimConfig) -> ExperimentResult:
    """Run the simulation; writes CSV / JSON-lines outputs when paths are configured."""
    cfg.validate()
    phys = dataclasses.replace(cfg.physics, tau=cfg.trainer.tau)
    model = MLP(cfg.model_sizes)
    if phys.model_dim != model.dim:
        phys = dataclasses.replace(phys, model_dim=model.dim)
    rs = _streams(cfg.seed, cfg.n_users)

    train_set, test_set = _load_data(cfg, rs["data"])
    shards = partition(train_set, cfg.n_users, cfg.partition, rs["data"],
                       samples_per_user=cfg.samples_per_user, labels_per_user=cfg.labels_per_user)
    p = aggregation_weights(shards)
    seen = Dataset(np.concatenate([s.inputs for s in shards]), np.concatenate([s.labels for s in shards]))
    profiles = draw_profiles(cfg.n_users, rs["placement"], cfg.population, p=p)
    for uid, fields in cfg.user_overrides.items():
        profiles[int(uid)] = dataclasses.replace(profiles[int(uid)], **{k: float(v) for k, v in fields.items()})
    eps_of = cfg.epsilon.schedule(cfg.rounds)

    w = model.init(rs["init"])
    states = [None] * cfg.n_users
    metrics, gains_log, diag_lines = [], [], []
    sim_time = 0.0
    for t in range(cfg.rounds):
        gains = sample_channels(profiles, phys, rs["fading"], round=t).gains
        gains_log.append(gains)
        diffs, scales = [], np.empty(cfg.n_users)
        for n, shard in enumerate(shards):
            diff, scales[n], states[n] = local_update(w, shard, model, cfg.trainer, rs["train"][n],
                                                      states[n], round_index=t)
            diffs.append(diff)
        eps = float(eps_of(t))
        problem = RoundProblem(profiles, gains, scales, eps, phys, b_cap=cfg.b_cap)
        alloc, diag = allocate(cfg, problem)

        if cfg.scheme == "lossless":
            updates = diffs
        else:
            updates = [quantize(diff, int(b), rs["quant"][n], m=phys.m)
                       for n, (diff, b) in enumerate(zip(diffs, alloc.B))]
        w = aggregate(w, updates, p)
        sim_time += alloc.round_latency

        train_loss, _ = evaluate(model, w, seen)
        _, acc = evaluate(model, w, test_set)
        slack = (eps - problem.quant_error(alloc.B)) / eps
        m = RoundMetrics(t, sim_time, alloc.round_latency, alloc.l_c, eps, slack, train_loss, acc,
                         np.asarray(alloc.B, int), alloc.l_up, alloc.E, alloc.f)
        metrics.append(m)
        log.info("round %d: latency %.4fs acc %.4f avg bits %.2f", t, m.round_latency, acc, m.avg_bits)
        if cfg.diagnostics_path:
            diag_lines.append({"round": t, "scheme": cfg.scheme,
                               "inputs": {"gains": gains.tolist(), "delta": scales.tolist(), "epsilon": eps},
                               "allocation": {"l_c": alloc.l_c, "f": alloc.f.tolist(), "E": alloc.E.tolist(),
                                              "l_up": alloc.l_up.tolist(), "B": np.asarray(alloc.B).tolist(),
                                              "round_latency": alloc.round_latency},
                               "oracle_checked": False, **diag})

    result = ExperimentResult(cfg, metrics, gains_log)
    if cfg.csv_path:
        write_metrics_csv(cfg.csv_path, [m.row() for m in metrics])
    if cfg.diagnostics_path:
        with open(cfg.diagnostics_path, "w") as fh:
            for line in diag_lines:
                fh.write(json.dumps(line) + "\n")
    return result


def write_metrics_csv(path, rows: list[dict]) -> None:
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


# ---------------------------------------------------------------- sweeps

def parse_epsilon(value) -> EpsilonSpec:
    """``0.1`` for a constant tolerance, ``"0.1->0.01"`` for a geometric decay over the run."""
    if isinstance(value, EpsilonSpec):
        return value
    if isinstance(value, str) and "->" in value:
        a, b = value.split("->")
        return EpsilonSpec("geometric", float(a), float(b))
    return EpsilonSpec("constant", float(value))


def run_sweep(base: SimConfig, axis: str, values, csv_path=None) -> dict[str, ExperimentResult]:
    """Run one leg per value along ``axis``; legs share the seed so channels are paired."""
    if axis not in ("epsilon", "scheme", "partition"):
        raise ConfigError(f"cannot sweep over {axis!r}")
    results, rows = {}, []
    for value in values:
        cfg = dataclasses.replace(base, csv_path=None, diagnostics_path=None)
        if axis == "epsilon":
            cfg.epsilon = parse_epsilon(value)
        elif axis == "scheme":
            cfg.scheme = str(value)
        else:
            cfg.partition = str(value)
        leg = str(value)
        res = run_experiment(cfg)
        results[leg] = res
        rows += [{"leg": leg, **m.row()} for m in res.metrics]
    if csv_path:
        write_metrics_csv(csv_path, rows)
    return results

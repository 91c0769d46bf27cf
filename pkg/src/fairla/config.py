"""Experiment configuration: one JSON document with network, diffusion,
campaign, eval and output blocks plus a global seed."""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .campaign import FAIR_LA, UNIFORM, CampaignConfig
from .diffusion import ERROR_BASELINE, MIS_DECAY, REALIZATION, TRAIN_WINDOW, TRUE_DECAY
from .errors import ConfigError
from .netgen import NetworkSpec

OUTPUT_ENV = "FAIRLA_OUTPUT"
DEFAULT_OUTPUT = "fairla_output"
SOURCES = ("generate", "csv", "hawkes")
METHODS = (FAIR_LA, UNIFORM)


@dataclass
class NetworkBlock:
    source: str = "generate"
    name: str = "network"
    # generator knobs (source=generate)
    n_users: int = 200
    case: str = "case1"
    target_mis_pct: float = 17.0
    exposed_fraction: float = 0.2
    heavy_subset_fraction: float = 0.25
    heavy_multiplier: float = 3.0
    edge_density: float = 0.05
    activity: float = 60.0
    cross_group_ratio: float = 0.02
    unexposed_share: float | None = None
    history: float | None = None
    # files (source=csv / hawkes)
    events: str | None = None
    adjacency: str | None = None
    mis_model: str | None = None
    true_model: str | None = None


@dataclass
class DiffusionBlock:
    mis_decay: float = MIS_DECAY
    true_decay: float = TRUE_DECAY
    window: float = REALIZATION
    train_window: float = TRAIN_WINDOW
    error_baseline: float = ERROR_BASELINE
    fit_max_iter: int = 10_000
    fit_tol: float = 1e-6
    self_check: bool = False


@dataclass
class CampaignBlock:
    capacity: float = 0.06
    balance: float = 1.3
    memory_depth: int = 300
    step: float | None = None
    epsilon: float = 0.01
    backend: str = "expected"
    eval_horizon: int = 1
    loss_sample_size: int | None = None
    max_iterations: int = 50_000
    shuffled: bool = False
    allow_unstable: bool = False
    checkpoint_every: int = 0


@dataclass
class EvalBlock:
    runs: int = 5
    methods: list = field(default_factory=lambda: [FAIR_LA, UNIFORM])
    formats: list = field(default_factory=lambda: ["json", "csv"])


@dataclass
class OutputBlock:
    directory: str | None = None


BLOCKS = {"network": NetworkBlock, "diffusion": DiffusionBlock, "campaign": CampaignBlock,
          "eval": EvalBlock, "output": OutputBlock}


@dataclass
class ExperimentConfig:
    network: NetworkBlock = field(default_factory=NetworkBlock)
    diffusion: DiffusionBlock = field(default_factory=DiffusionBlock)
    campaign: CampaignBlock = field(default_factory=CampaignBlock)
    eval: EvalBlock = field(default_factory=EvalBlock)
    output: OutputBlock = field(default_factory=OutputBlock)
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - set(BLOCKS) - {"seed"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        for name, block in BLOCKS.items():
            raw = d.get(name, {})
            if not isinstance(raw, dict):
                raise ConfigError(f"block '{name}' must be an object")
            known = {f.name for f in fields(block)}
            bad = set(raw) - known
            if bad:
                raise ConfigError(f"unknown keys in '{name}': {sorted(bad)}")
            kwargs[name] = block(**raw)
        seed = d.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
        cfg = cls(seed=seed, **kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path | None) -> "ExperimentConfig":
        if path is None:
            cfg = cls()
            cfg.validate()
            return cfg
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def override(self, key: str, raw: str) -> None:
        """Apply ``block.field=value``; the value is parsed as JSON, else kept as a string."""
        if key == "seed":
            block, name = None, "seed"
        else:
            if "." not in key:
                raise ConfigError(f"override '{key}' must look like block.field")
            block, name = key.split(".", 1)
            if block not in BLOCKS or name not in {f.name for f in fields(BLOCKS[block])}:
                raise ConfigError(f"unknown override '{key}'")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        if block is None:
            self.seed = value
        else:
            setattr(getattr(self, block), name, value)

    def validate(self) -> None:
        net = self.network
        if net.source not in SOURCES:
            raise ConfigError(f"network.source must be one of {SOURCES}, got {net.source!r}")
        if net.source == "csv":
            for key in ("events", "adjacency"):
                if not getattr(net, key):
                    raise ConfigError(f"network.{key} is required for source=csv")
        if net.source == "hawkes":
            for key in ("mis_model", "true_model"):
                if not getattr(net, key):
                    raise ConfigError(f"network.{key} is required for source=hawkes")
        for key in ("events", "adjacency", "mis_model", "true_model"):
            path = getattr(net, key)
            if path and not Path(path).exists():
                raise ConfigError(f"network.{key}: file not found: {path}")
        if not self.eval.methods:
            raise ConfigError("eval.methods must be nonempty")
        bad = set(self.eval.methods) - set(METHODS)
        if bad:
            raise ConfigError(f"unknown methods {sorted(bad)}; choose from {METHODS}")
        if not isinstance(self.eval.runs, int) or self.eval.runs < 1:
            raise ConfigError("eval.runs must be a positive integer")
        if set(self.eval.formats) - {"json", "csv"} or not self.eval.formats:
            raise ConfigError("eval.formats must be a nonempty subset of ['json', 'csv']")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        d = self.diffusion
        if not (d.mis_decay > 0 and d.true_decay > 0 and d.window > 0 and d.train_window > 0):
            raise ConfigError("diffusion decays and windows must be positive")
        try:
            self.network_spec(0)
            self.campaign_config(0)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def output_dir(self) -> Path:
        return Path(self.output.directory or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)

    def network_spec(self, seed: int, history: float | None = None) -> NetworkSpec:
        net = self.network
        return NetworkSpec(n_users=net.n_users, case=net.case, target_mis_pct=net.target_mis_pct,
                           exposed_fraction=net.exposed_fraction, heavy_subset_fraction=net.heavy_subset_fraction,
                           heavy_multiplier=net.heavy_multiplier, edge_density=net.edge_density, seed=seed,
                           activity=net.activity, history=history or net.history or self.diffusion.train_window,
                           cross_group_ratio=net.cross_group_ratio, unexposed_share=net.unexposed_share,
                           name=net.name)

    def campaign_config(self, seed: int) -> CampaignConfig:
        c = self.campaign
        return CampaignConfig(capacity=c.capacity, balance=c.balance, memory_depth=c.memory_depth, step=c.step,
                              epsilon=c.epsilon, backend=c.backend, eval_horizon=c.eval_horizon,
                              window=self.diffusion.window, loss_sample_size=c.loss_sample_size, seed=seed,
                              max_iterations=c.max_iterations, shuffled=c.shuffled,
                              allow_unstable=c.allow_unstable)


def override_flags() -> list[tuple[str, str]]:
    """Every ``block.field`` override with a short type hint, for ``--help``."""
    out = [("seed", "int")]
    for name, block in BLOCKS.items():
        for f in fields(block):
            hint = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
            out.append((f"{name}.{f.name}", hint))
    return out

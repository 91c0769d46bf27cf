"""Command-line driver: ``fairla <command> [--config FILE] [--block.field=value ...]``.

Exit codes: 0 success, 1 domain error, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import campaign as camp
from .campaign import FAIR_LA, UNIFORM
from .config import OUTPUT_ENV, ExperimentConfig, override_flags
from .diffusion import Content, EventLog, HawkesModel, Realization, fit, simulate, simulation_errors
from .environment import Network
from .errors import ConfigError, ConvergenceError, FairLAError
from .evaluation import ReportRow, RunMetrics, aggregate, emit_report
from .netgen import generate, ingest_csv, load_adjacency, mis_percentage, save_adjacency
from .seeding import derive_seed

log = logging.getLogger("fairla")


def _write_json(path: Path, payload) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def _relative_error(estimate: np.ndarray, truth: np.ndarray) -> float:
    norm = np.linalg.norm(truth)
    return float(np.linalg.norm(estimate - truth) / norm) if norm > 0 else float(np.linalg.norm(estimate))


class _Inputs:
    """Adjacency and event logs resolved from the network block."""

    def __init__(self, adjacency, mis_log: EventLog, true_log: EventLog, truth=None, generated=None):
        self.adjacency = adjacency
        self.mis_log = mis_log
        self.true_log = true_log
        self.truth = truth
        self.generated = generated

    @property
    def n_users(self) -> int:
        return self.adjacency.shape[0]

    @property
    def horizon(self) -> float:
        return self.mis_log.horizon


def load_inputs(cfg: ExperimentConfig, history: float | None = None) -> _Inputs:
    net = cfg.network
    if net.source == "generate":
        gen = generate(cfg.network_spec(derive_seed(cfg.seed, "network"), history))
        return _Inputs(gen.adjacency, gen.mis_log, gen.true_log, generated=gen)
    if net.source == "csv":
        adjacency = load_adjacency(net.adjacency)
        mis, true = ingest_csv(net.events, adjacency.shape[0], net.history)
        return _Inputs(adjacency, mis, true)
    models = {Content.MIS: HawkesModel.load(net.mis_model), Content.TRUE: HawkesModel.load(net.true_model)}
    n = models[Content.MIS].n_users
    if net.adjacency:
        adjacency = load_adjacency(net.adjacency)
    else:
        adjacency = ((models[Content.MIS].influence > 0) | (models[Content.TRUE].influence > 0)).astype(float)
        np.fill_diagonal(adjacency, 1.0)
    horizon = history or net.history or cfg.diffusion.train_window
    logs = [simulate(models[c], None, horizon, derive_seed(cfg.seed, "hawkes", c.value)) for c in Content]
    if models[Content.MIS].n_users != models[Content.TRUE].n_users or adjacency.shape[0] != n:
        raise ValueError("model files and adjacency disagree on n_users")
    return _Inputs(adjacency, logs[0], logs[1], truth=models)


def fit_models(cfg: ExperimentConfig, inputs: _Inputs) -> dict:
    d = cfg.diffusion
    fits = {}
    for content, lg, decay in ((Content.MIS, inputs.mis_log, d.mis_decay), (Content.TRUE, inputs.true_log, d.true_decay)):
        fits[content] = fit(lg, decay, inputs.n_users, content=content, max_iter=d.fit_max_iter, tol=d.fit_tol)
    return fits


def build_network(cfg: ExperimentConfig, inputs: _Inputs | None = None) -> Network:
    inputs = inputs or load_inputs(cfg)
    fits = fit_models(cfg, inputs)
    return Network(fits[Content.MIS].model, fits[Content.TRUE].model, inputs.adjacency,
                   inputs.mis_log.merge(inputs.true_log), name=cfg.network.name)


# -- commands -----------------------------------------------------------------

def cmd_generate(cfg: ExperimentConfig, args) -> int:
    out = cfg.output_dir()
    inputs = load_inputs(cfg)
    if inputs.generated is not None:
        paths = inputs.generated.export(out)
    else:
        out.mkdir(parents=True, exist_ok=True)
        paths = {"adjacency": out / "adjacency.json", "events": out / "events.csv",
                 "summary": out / "network_summary.json"}
        save_adjacency(inputs.adjacency, paths["adjacency"])
        inputs.mis_log.merge(inputs.true_log).to_csv(paths["events"])
        _write_json(paths["summary"], {"n_users": inputs.n_users,
                                       "achieved_mis_pct": mis_percentage(inputs.mis_log, inputs.true_log),
                                       "mis_events": len(inputs.mis_log), "true_events": len(inputs.true_log)})
    summary = json.loads(Path(paths["summary"]).read_text())
    log.info("network: %d users, %.2f%% misinformation -> %s", inputs.n_users, summary["achieved_mis_pct"], out)
    return 0


def cmd_fit(cfg: ExperimentConfig, args) -> int:
    out = cfg.output_dir()
    inputs = load_inputs(cfg)
    report = {"n_users": inputs.n_users, "mis_decay": cfg.diffusion.mis_decay,
              "true_decay": cfg.diffusion.true_decay, "events": {"mis": len(inputs.mis_log),
                                                                 "true": len(inputs.true_log)}}
    status = 0
    d = cfg.diffusion
    out.mkdir(parents=True, exist_ok=True)
    for content, lg, decay, name in ((Content.MIS, inputs.mis_log, d.mis_decay, "model_mis.json"),
                                     (Content.TRUE, inputs.true_log, d.true_decay, "model_true.json")):
        try:
            result = fit(lg, decay, inputs.n_users, content=content, max_iter=d.fit_max_iter, tol=d.fit_tol)
        except ConvergenceError as exc:
            result, status = exc.best, 1
            report.setdefault("errors", []).append(f"{content.value}: {exc}")
        entry = result.report() if result is not None else {"converged": False}
        if result is not None:
            result.model.save(out / name)
            if inputs.truth is not None:
                truth = inputs.truth[content]
                entry["relative_error"] = {"mu": _relative_error(result.model.mu, truth.mu),
                                           "influence": _relative_error(result.model.influence, truth.influence)}
        report[content.value] = entry
    _write_json(out / "fit_report.json", report)
    if status:
        log.error("fit did not converge; partial report in %s", out / "fit_report.json")
    return status


def cmd_simulate(cfg: ExperimentConfig, args) -> int:
    out = cfg.output_dir()
    d = cfg.diffusion
    split, end = d.train_window, d.train_window + d.window
    inputs = load_inputs(cfg, history=end)
    if inputs.horizon < end:
        raise FairLAError(f"insufficient history: need {end} s of events (train {split} + test {d.window}), "
                          f"got {inputs.horizon}")
    actual = inputs.mis_log.merge(inputs.true_log)
    n = inputs.n_users
    train = {c: actual.of_content(c).before(split) for c in Content}
    train = {c: EventLog(lg.times, lg.users, lg.contents, horizon=split, n_users=n) for c, lg in train.items()}
    decays = {Content.MIS: d.mis_decay, Content.TRUE: d.true_decay}
    models = {c: fit(train[c], decays[c], n, content=c, max_iter=d.fit_max_iter, tol=d.fit_tol).model
              for c in Content}
    window = Realization(0, split, end)
    if d.self_check:
        predicted = actual.window(split, end)
    else:
        predicted = EventLog.empty(horizon=end, n_users=n)
        for c in Content:
            sim = simulate(models[c], None, end, derive_seed(cfg.seed, "predict", c.value), history=train[c],
                           start=split, allow_unstable=cfg.campaign.allow_unstable)
            predicted = predicted.merge(sim)
    errors = simulation_errors(actual, predicted, window, models)
    epsilon = float(np.mean(list(errors.values())))
    out.mkdir(parents=True, exist_ok=True)
    predicted.to_csv(out / "predicted.csv")
    report = {"epsilon": epsilon, "per_content": {c.value: e for c, e in errors.items()},
              "baseline": d.error_baseline, "within_baseline": epsilon <= d.error_baseline,
              "train_window": [0.0, split], "test_window": [split, end], "self_check": d.self_check,
              "predicted_events": len(predicted), "actual_events": len(actual.window(split, end))}
    _write_json(out / "simulation_report.json", report)
    log.info("simulation error %.4f (baseline %.1f)", epsilon, d.error_baseline)
    return 0


def _run_method(network: Network, config, method: str, **kwargs):
    if method == UNIFORM:
        return camp.uniform_baseline(network, config)
    return camp.run(network, config, **kwargs)


def cmd_mitigate(cfg: ExperimentConfig, args) -> int:
    out = cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    network = build_network(cfg)
    config = cfg.campaign_config(derive_seed(cfg.seed, "campaign"))
    timing = {}
    for method in cfg.eval.methods:
        ckpt = out / f"checkpoint_{method}.json"
        if method == FAIR_LA and args.resume:
            if not ckpt.exists():
                raise FairLAError(f"nothing to resume: {ckpt} does not exist")
            result = camp.resume(ckpt, network, checkpoint_every=cfg.campaign.checkpoint_every,
                                 stop_after=args.stop_after)
        elif method == FAIR_LA:
            result = camp.run(network, config, checkpoint=ckpt, checkpoint_every=cfg.campaign.checkpoint_every,
                              stop_after=args.stop_after)
        else:
            result = camp.uniform_baseline(network, config)
        result.save(out / f"campaign_{method}.json")
        timing[method] = result.wall_time_seconds
        state = "complete" if result.complete else "interrupted (resume with --resume)"
        log.info("%s: consumption %.3f, %d sweeps, %s", method, result.consumption, result.iterations, state)
    _write_json(out / "timing.json", timing)
    return 0


def _evaluate_one(network: Network, config, method: str) -> tuple[dict, float]:
    result = _run_method(network, config, method)
    return result.metrics.to_dict(include_timing=False), result.wall_time_seconds


def cmd_evaluate(cfg: ExperimentConfig, args) -> int:
    out = cfg.output_dir()
    network = build_network(cfg)
    jobs = [(r, method, cfg.campaign_config(derive_seed(cfg.seed, "run", r)))
            for r in range(cfg.eval.runs) for method in cfg.eval.methods]
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(_evaluate_one, [network] * len(jobs), [j[2] for j in jobs],
                                    [j[1] for j in jobs]))
    else:
        results = [_evaluate_one(network, config, method) for _, method, config in jobs]
    runs = [{"run": r, "method": method, "network": cfg.network.name, "capacity": cfg.campaign.capacity,
             "metrics": metrics} for (r, method, _), (metrics, _) in zip(jobs, results)]
    _write_json(out / "runs.json", {"runs": runs})
    _write_json(out / "timing.json", {f"{m}/{r}": t for (r, m, _), (_, t) in zip(jobs, results)})
    _emit_from_runs(cfg, runs, out)
    return 0


def _emit_from_runs(cfg: ExperimentConfig, runs: list, out: Path) -> None:
    groups: dict[tuple, list] = {}
    for rec in runs:
        groups.setdefault((rec["method"], rec["network"], rec["capacity"]), []).append(
            RunMetrics(**rec["metrics"]))
    rows = [ReportRow(m, n, c, aggregate(v)) for (m, n, c), v in groups.items()]
    for path in emit_report(rows, out, cfg.eval.formats):
        log.info("wrote %s", path)


def cmd_report(cfg: ExperimentConfig, args) -> int:
    out = cfg.output_dir()
    path = out / "runs.json"
    if not path.exists():
        raise FairLAError(f"{path} not found; run 'evaluate' first")
    _emit_from_runs(cfg, json.loads(path.read_text())["runs"], out)
    return 0


COMMANDS = {"generate": (cmd_generate, "write adjacency, event CSV and network statistics"),
            "fit": (cmd_fit, "fit misinformation and true-content Hawkes models"),
            "simulate": (cmd_simulate, "train on the first window, predict the next, report the error"),
            "mitigate": (cmd_mitigate, "run each configured method and write campaign reports"),
            "evaluate": (cmd_evaluate, "repeat runs per method and write the aggregate report"),
            "report": (cmd_report, "re-emit the aggregate report from saved runs")}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config JSON")
    common.add_argument("--output", help=f"output directory (default: output.directory, then ${OUTPUT_ENV})")
    common.add_argument("--threads", type=int, default=1, help="worker processes for independent runs")
    common.add_argument("-v", "--verbose", action="store_true")
    overrides = common.add_argument_group("config overrides")
    for key, hint in override_flags():
        overrides.add_argument(f"--{key}", dest=f"set:{key}", metavar=hint.replace(" ", ""), default=None)

    parser = argparse.ArgumentParser(prog="fairla", description="fair misinformation mitigation experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        if name == "mitigate":
            p.add_argument("--resume", action="store_true", help="continue fair_la from its checkpoint")
            p.add_argument("--stop-after", type=int, default=None, metavar="SWEEPS",
                           help="stop fair_la after this many sweeps and keep the checkpoint")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    for key, value in vars(args).items():
        if key.startswith("set:") and value is not None:
            cfg.override(key[4:], value)
    if args.output:
        cfg.output.directory = args.output
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"fairla: config error: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        code = COMMANDS[args.command][0](cfg, args)
    except ConfigError as exc:
        print(f"fairla: config error: {exc}", file=sys.stderr)
        return 2
    except (FairLAError, ValueError, OSError) as exc:
        print(f"fairla: error: {exc}", file=sys.stderr)
        return 1
    log.debug("%s finished in %.2fs", args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())

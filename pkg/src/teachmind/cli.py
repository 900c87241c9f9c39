"""Command-line interface.

Data goes to standard output or named files; diagnostics go to standard
error at the level chosen by the TEACH_LOG environment variable
(error/info/debug, default error).
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click

from . import __version__
from .episodes import compute_metrics, run_batch, run_episode
from .formats import (
    DOMAIN_FORMAT,
    IPOMDP_FORMAT,
    POMDP_FORMAT,
    domain_config_from_obj,
    joint_model_from_obj,
    metrics_to_csv,
    model_from_obj,
    parse_belief_csv,
    scenario_from_obj,
    trace_to_jsonl,
)
from .oracle import brute_force_expectimax
from .planning import PlanConfig, select_action

logger = logging.getLogger("teachmind")


def _setup_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("TEACH_LOG", "error").lower(), logging.ERROR
    )
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _load_json(path: str) -> dict:
    return json.loads(Path(path).read_text())


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Belief-space engine for learning from a teacher."""
    _setup_logging()


@main.command()
@click.argument("model_path", type=click.Path(exists=True))
def validate(model_path: str) -> None:
    """Validate a pomdp/1, ipomdp/1, or teachdomain/1 JSON document."""
    obj = _load_json(model_path)
    fmt = obj.get("format")
    try:
        if fmt == POMDP_FORMAT:
            model = model_from_obj(obj)
            summary = (f"{len(model.states)} states, {len(model.actions)} actions, "
                       f"{len(model.observations)} observations")
        elif fmt == IPOMDP_FORMAT:
            jm, belief = joint_model_from_obj(obj)
            summary = (f"{len(jm.states)} states, {len(jm.student_actions)}/"
                       f"{len(jm.teacher_actions)} actions, initial belief "
                       f"{'present' if belief else 'absent'}")
        elif fmt == DOMAIN_FORMAT:
            cfg = domain_config_from_obj(obj)
            summary = (f"|H|={cfg.n_hypotheses}, {cfg.n_objects} objects, "
                       f"teacher level {cfg.teacher_level}")
        else:
            raise click.ClickException(f"unknown format {fmt!r}")
    except click.ClickException:
        raise
    except Exception as exc:
        raise click.ClickException(f"invalid: {exc}") from exc
    click.echo(f"OK {fmt}: {summary}")


@main.command()
@click.argument("model_path", type=click.Path(exists=True))
@click.option("--belief", "belief_csv", required=True,
              help="Comma-separated probabilities over states.")
@click.option("--horizon", type=int, required=True)
@click.option("--cap", type=int, default=None, help="Observation branch cap.")
@click.option("--seed", type=int, default=0)
def plan(model_path: str, belief_csv: str, horizon: int, cap: int | None, seed: int) -> None:
    """Select the maximum-expected-utility action for a pomdp/1 model."""
    model = model_from_obj(_load_json(model_path))
    belief = parse_belief_csv(belief_csv)
    cfg = PlanConfig(horizon=horizon, observation_branch_cap=cap, seed=seed)
    result = select_action(model, belief, cfg)
    logger.info("expanded %d nodes, pruned %d branches",
                result.nodes_expanded, result.branches_pruned)
    click.echo(json.dumps({
        "chosen_action": result.chosen_action,
        "q_values": result.q_values,
        "nodes_expanded": result.nodes_expanded,
        "branches_pruned": result.branches_pruned,
    }, sort_keys=True))


@main.command()
@click.argument("model_path", type=click.Path(exists=True))
@click.option("--belief", "belief_csv", required=True)
@click.option("--horizon", type=int, required=True)
def oracle(model_path: str, belief_csv: str, horizon: int) -> None:
    """Brute-force q-values for a pomdp/1 model (guard-railed)."""
    model = model_from_obj(_load_json(model_path))
    belief = parse_belief_csv(belief_csv)
    q = brute_force_expectimax(model, belief, horizon)
    click.echo(json.dumps({"q_values": q}, sort_keys=True))


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True))
@click.option("--seed", type=int, required=True)
@click.option("--trace", "trace_path", type=click.Path(), default=None,
              help="Write the trace JSONL here instead of standard output.")
def simulate(scenario_path: str, seed: int, trace_path: str | None) -> None:
    """Run one seeded episode of a teachdomain/1 scenario."""
    scenario = scenario_from_obj(_load_json(scenario_path))
    trace = run_episode(scenario, seed)
    metrics = compute_metrics(trace)
    logger.info("theta=%s time_to_threshold=%s final_entropy=%.4f",
                trace.theta, metrics.time_to_threshold, metrics.final_entropy_bits)
    text = trace_to_jsonl(trace)
    if trace_path:
        Path(trace_path).write_text(text)
        click.echo(f"wrote {trace_path} ({len(trace.steps)} steps)")
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True))
@click.option("--seeds", "n_seeds", type=int, required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def batch(scenario_path: str, n_seeds: int, out_path: str) -> None:
    """Aggregate run_episode over seeds 0..N-1 and write a metrics CSV."""
    scenario = scenario_from_obj(_load_json(scenario_path))
    aggregate, per_seed = run_batch(scenario, n_seeds)
    Path(out_path).write_text(metrics_to_csv(per_seed))
    click.echo(json.dumps({
        "seeds": n_seeds,
        "mean_time_to_threshold": aggregate.time_to_threshold,
        "mean_final_entropy_bits": aggregate.final_entropy_bits,
        "declare_accuracy": aggregate.declare_accuracy,
        "out": out_path,
    }, sort_keys=True))


@main.command()
@click.option("--port", type=int, default=8701)
@click.option("--host", default="127.0.0.1")
@click.option("--console-dir", type=click.Path(exists=True), default=None,
              help="Static directory with the built teacher console "
                   "(default: ./frontend/dist when present).")
def serve(port: int, host: str, console_dir: str | None) -> None:
    """Host live teaching sessions over the WebSocket protocol."""
    import uvicorn

    from .service import create_app

    if console_dir is None:
        candidate = Path("frontend/dist")
        if candidate.is_dir():
            console_dir = str(candidate)
    uvicorn.run(create_app(console_dir), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()

"""Command-line entry point: serve, gen-dataset, train, eval, simulate.

Exit codes: 0 success, 1 runtime failure (with a machine-readable JSON
error line on stderr), 2 usage error.
"""

from __future__ import annotations

import json
import socket
import sys
from pathlib import Path
from typing import Optional

import click

from .bayes import (
    default_candidates,
    default_structure,
    learn_parameters,
    load_model,
    parse_candidates,
    parse_structure,
    read_dataset,
    save_model,
    write_dataset,
)
from .config import CliConfig, resolve_config
from .selector import SelectionPipeline, UserContext
from .service import MODEL_FILENAME, create_app
from .sim import (
    ServiceUnreachable,
    default_ground_truth,
    eval_report,
    gen_dataset,
    load_route,
    replay,
    write_event_log,
)
from .store import ContentStore


def _fail(code: str, message: str) -> None:
    click.echo(json.dumps({"error": code, "message": message}), err=True)
    sys.exit(1)


def _config_options(command):
    """Selector tunables shared by serve and simulate."""
    options = [
        click.option("--radius-m", type=float, default=None, help="Notification radius [50]."),
        click.option("--sector-half-angle-deg", type=float, default=None,
                     help="Half-angle of the forward sector [50]."),
        click.option("--cooldown-min", type=float, default=None,
                     help="Per-user re-notification cooldown in minutes [30]."),
        click.option("--same-threshold-m", type=float, default=None,
                     help="Distance treated as 'at the same spot' [10]."),
        click.option("--stationary-threshold-m", type=float, default=None,
                     help="Displacement below which the heading is retained [3]."),
        click.option("--poll-interval-s", type=float, default=None, help="Default poll interval [150]."),
        click.option("--max-query-radius-m", type=float, default=None,
                     help="Largest allowed /contents/near radius [2000]."),
        click.option("--utc-offset-min", type=int, default=None,
                     help="Minutes added to UTC for local time windows [0]."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _resolve(config_file: Optional[str], **flags) -> CliConfig:
    try:
        return resolve_config(flags=flags, config_file=config_file)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None


def _selector_flags(kwargs: dict) -> dict:
    names = (
        "radius_m",
        "sector_half_angle_deg",
        "cooldown_min",
        "same_threshold_m",
        "stationary_threshold_m",
        "poll_interval_s",
        "max_query_radius_m",
        "utc_offset_min",
    )
    return {name: kwargs[name] for name in names}


def _load_net_with_fallback(model: Optional[str], data_dir: Optional[Path]):
    if model is not None:
        return load_model(model)
    if data_dir is not None and (data_dir / MODEL_FILENAME).exists():
        return load_model(data_dir / MODEL_FILENAME)
    click.echo("warning: no trained model found, falling back to a uniform model", err=True)
    return learn_parameters(default_structure(), [], alpha=1.0)


@click.group()
@click.option("--config", "config_file", type=click.Path(), default=None,
              help="JSON config file (also WALKNOTIFY_CONFIG).")
@click.pass_context
def main(ctx, config_file):
    """Nearby-barrier notification service and its evaluation tools."""
    ctx.ensure_object(dict)
    ctx.obj["config_file"] = config_file


@main.command()
@click.option("--port", type=int, default=None, help="Listen port [8000].")
@click.option("--host", default="127.0.0.1", show_default=True, help="Bind address.")
@click.option("--data-dir", type=click.Path(), default=None, help="Persistent state directory.")
@click.option("--model", type=click.Path(exists=True), default=None, help="Trained model file.")
@click.option("--web-dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Serve a built web client from /app.")
@_config_options
@click.pass_context
def serve(ctx, port, host, data_dir, model, web_dir, **kwargs):
    """Run the HTTP service."""
    config = _resolve(ctx.obj["config_file"], data_dir=data_dir, port=port, **_selector_flags(kwargs))
    click.echo(config.describe(), err=True)
    if config.data_dir is None:
        raise click.UsageError("serve needs a data directory (--data-dir or WALKNOTIFY_DATA_DIR)")

    try:
        config.data_dir.mkdir(parents=True, exist_ok=True)
        probe = config.data_dir / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        _fail("data_dir_unwritable", f"data directory {config.data_dir} is not writable: {exc}")

    try:
        with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as probe_socket:
            probe_socket.bind((host, config.port))
    except OSError as exc:
        _fail("bind_failed", f"cannot bind {host}:{config.port}: {exc}")

    net = _load_net_with_fallback(model, config.data_dir)
    app = create_app(data_dir=config.data_dir, config=config.selector, net=net, web_dir=web_dir)

    import uvicorn

    uvicorn.run(app, host=host, port=config.port, log_level="warning")


@main.command("gen-dataset")
@click.option("--n", type=click.IntRange(min=0), required=True, help="Number of records.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--noise", type=click.FloatRange(0.0, 0.5), default=0.2, show_default=True,
              help="Label-flip rate; best reachable accuracy is 1 - noise.")
@click.option("--out", type=click.Path(), required=True, help="CSV output path.")
def gen_dataset_cmd(n, seed, noise, out):
    """Generate a synthetic labeled dataset."""
    spec = default_ground_truth(noise=noise)
    records = gen_dataset(spec, n, seed=seed)
    write_dataset(records, out)
    click.echo(
        f"wrote {len(records)} records to {out} "
        f"(noise {noise:g}, ground-truth best accuracy {spec.bayes_optimal_accuracy():.0%})"
    )


@main.command()
@click.option("--dataset", type=click.Path(exists=True), required=True, help="Training CSV.")
@click.option("--alpha", type=click.FloatRange(min=0.0), default=1.0, show_default=True,
              help="Additive smoothing count.")
@click.option("--structure", "structure_path", type=click.Path(exists=True), default=None,
              help="Alternative structure spec file.")
@click.option("--model-out", type=click.Path(), default="model.json", show_default=True)
def train(dataset, alpha, structure_path, model_out):
    """Learn model parameters from a dataset."""
    structure = (
        parse_structure(Path(structure_path).read_text(encoding="utf-8"))
        if structure_path
        else default_structure()
    )
    try:
        records = read_dataset(dataset)
        net = learn_parameters(structure, records, alpha=alpha)
    except ValueError as exc:
        _fail("malformed_dataset", str(exc))
    save_model(net, model_out)
    click.echo(f"trained on {len(records)} records, model written to {model_out}")


@main.command("eval")
@click.option("--dataset", type=click.Path(exists=True), required=True, help="Labeled CSV.")
@click.option("--k", type=click.IntRange(min=2), default=3, show_default=True, help="Fold count.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--alpha", type=click.FloatRange(min=0.0), default=1.0, show_default=True)
@click.option("--structure", "structure_path", type=click.Path(exists=True), default=None)
@click.option("--candidates", "candidates_path", type=click.Path(exists=True), default=None,
              help="Alternative candidate map file.")
@click.option("--json", "as_json", is_flag=True, help="Emit the report as JSON.")
def eval_cmd(dataset, k, seed, alpha, structure_path, candidates_path, as_json):
    """Cross-validate reaction prediction on a dataset."""
    structure = (
        parse_structure(Path(structure_path).read_text(encoding="utf-8"))
        if structure_path
        else default_structure()
    )
    candidates = (
        parse_candidates(Path(candidates_path).read_text(encoding="utf-8"))
        if candidates_path
        else default_candidates()
    )
    try:
        records = read_dataset(dataset)
        report = eval_report(records, k, structure=structure, alpha=alpha, candidates=candidates, seed=seed)
    except ValueError as exc:
        _fail("eval_failed", str(exc))
    if as_json:
        click.echo(json.dumps(report.to_json_dict(), indent=2))
    else:
        click.echo(report.render_text(), nl=False)


@main.command()
@click.option("--route", "route_path", type=click.Path(exists=True), required=True,
              help="Route JSON file (waypoints, speed, poll_interval).")
@click.option("--context", "context_path", type=click.Path(exists=True), required=True,
              help="User context JSON file.")
@click.option("--server-url", default=None, help="Replay against a running server.")
@click.option("--in-process", is_flag=True, help="Replay against an in-process pipeline (default).")
@click.option("--data-dir", type=click.Path(), default=None,
              help="Directory with contents.jsonl for in-process replay.")
@click.option("--model", type=click.Path(exists=True), default=None, help="Trained model file.")
@click.option("--out", type=click.Path(), default="events.jsonl", show_default=True,
              help="Event log output path.")
@click.option("--user-id", default="walker", show_default=True)
@click.option("--start-at", type=float, default=0.0, show_default=True,
              help="Epoch seconds of the first fix.")
@_config_options
@click.pass_context
def simulate(ctx, route_path, context_path, server_url, in_process, data_dir, model, out,
             user_id, start_at, **kwargs):
    """Replay a walk and log every notification and suppression."""
    if server_url and in_process:
        raise click.UsageError("choose either --server-url or --in-process")
    config = _resolve(ctx.obj["config_file"], data_dir=data_dir, **_selector_flags(kwargs))
    click.echo(config.describe(), err=True)

    try:
        route = load_route(route_path)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"bad route file {route_path}: {exc}") from None
    try:
        ctx_fields = json.loads(Path(context_path).read_text(encoding="utf-8"))
        user_ctx = UserContext(**ctx_fields)
    except (TypeError, ValueError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"bad context file {context_path}: {exc}") from None

    if server_url:
        try:
            result = replay(route, user_ctx, server_url=server_url, user_id=user_id, start_at=start_at)
        except ServiceUnreachable as exc:
            _fail("service_unreachable", str(exc))
    else:
        net = _load_net_with_fallback(model, config.data_dir)
        if config.data_dir is not None:
            store = ContentStore.load(config.data_dir, config.selector.stationary_threshold_m)
        else:
            store = ContentStore(stationary_threshold_m=config.selector.stationary_threshold_m)
        pipeline = SelectionPipeline(store, net, config=config.selector)
        result = replay(route, user_ctx, pipeline=pipeline, user_id=user_id, start_at=start_at)

    write_event_log(result, out)
    summary = result.summary()
    click.echo(f"polls: {summary.polls}")
    click.echo(f"notifications: {summary.notifications}")
    click.echo(f"suppressions: {summary.suppressions}")
    timing = " ".join(f"{name}={count}" for name, count in summary.timing_counts.items())
    click.echo(f"timing: {timing}")
    click.echo(f"event log: {out}")


if __name__ == "__main__":
    main()

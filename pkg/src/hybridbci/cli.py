"""Command-line interface: simulate, decode, evaluate, serve, replay."""
from __future__ import annotations

import json
import sys

import click

from .configfile import AppConfig, ConfigError, default_document, load_config
from .robot import Command
from .runner import RunnerError, decode_file, replay_command_log, run_offline


def _load(config_path) -> AppConfig:
    if config_path is None:
        return AppConfig.default()
    return load_config(config_path)


@click.group()
def main():
    """Hybrid SSVEP+P300 BCI simulator."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--sessions", type=int, default=None, help="Override the protocol's session count.")
@click.option("--out-edf", type=click.Path(), default=None, help="Write the synthetic recording as EDF.")
@click.option("--report", type=click.Path(), default=None, help="Write the evaluation report JSON.")
@click.option("--timing/--no-timing", default=False,
              help="Include wall-clock decode latencies (breaks byte-identical reruns).")
def simulate(config_path, seed, sessions, out_edf, report, timing):
    """Run a synthetic session end to end and score the decoders."""
    config = _load(config_path)
    result = run_offline(config, seed=seed, sessions=sessions, out_edf=out_edf)
    text = result.to_json(include_timing=timing)
    if report:
        with open(report, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)
    acc = result.accuracy("fused")
    click.echo(f"fused accuracy: {acc:.3f} over {len(result.windows)} windows", err=True)


@main.command()
@click.option("--in-edf", "in_edf", type=click.Path(exists=True), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--report", type=click.Path(), default=None)
def decode(in_edf, config_path, report):
    """Decode a recorded EDF file (truth-free decisions)."""
    config = _load(config_path)
    result = decode_file(in_edf, config)
    text = result.to_json()
    if report:
        with open(report, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)
    for w in result.warnings:
        click.echo(f"warning: {w}", err=True)


@main.command()
@click.argument("reports", type=click.Path(exists=True), nargs=-1, required=True)
def evaluate(reports):
    """Print an accuracy table from one or more report files."""
    header = f"{'report':40s} {'windows':>8s} {'ssvep':>8s} {'p300':>8s} {'fused':>8s}"
    click.echo(header)
    for path in reports:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        acc = doc.get("accuracy", {})
        fmt = lambda v: f"{v:.3f}" if isinstance(v, (int, float)) else "-"
        click.echo(
            f"{path:40s} {len(doc.get('windows', [])):>8d} "
            f"{fmt(acc.get('ssvep')):>8s} {fmt(acc.get('p300')):>8s} {fmt(acc.get('fused')):>8s}"
        )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--port", type=int, default=None, help="Override the gateway port.")
@click.option("--seed", type=int, default=0, show_default=True)
def serve(config_path, port, seed):
    """Run the live pipeline and WebSocket gateway."""
    import uvicorn

    from .gateway import create_app

    config = _load(config_path)
    app = create_app(config, realtime=True, seed=seed)
    uvicorn.run(app, host="127.0.0.1", port=port or config.gateway.port)


@main.command()
@click.option("--command-log", "command_log", type=click.Path(exists=True), required=True,
              help="JSON-lines file, one {\"command\": ...} object per line.")
def replay(command_log):
    """Replay a command log through the robot kinematics and print the pose."""
    commands = []
    with open(command_log, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                commands.append(Command(obj["command"]))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise click.ClickException(f"bad command log line {line_no}: {exc}")
    state = replay_command_log(commands)
    click.echo(json.dumps({"x": state.x, "y": state.y, "heading": state.heading.value}))


@main.command("default-config")
def default_config():
    """Print the default JSON configuration document."""
    click.echo(json.dumps(default_document(), indent=2))


def entry():
    try:
        main(standalone_mode=True)
    except (ConfigError, RunnerError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    entry()

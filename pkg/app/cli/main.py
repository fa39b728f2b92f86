"""CLI entry point for the magneto-electric DW neuro-synaptic simulator (medw)."""

import logging
from pathlib import Path
from typing import Optional

import typer

app = typer.Typer(
    name="medw",
    help="ME-DW neuro-synaptic device simulator and spiking network trainer",
    add_completion=False,
)

logging.basicConfig(
    level=logging.INFO,
    format="%(levelname)s: %(message)s",
)

CONFIG_OPT = typer.Option(None, "--config", "-c", help="Run config YAML (defaults: configs/config.yaml)")
SEED_OPT = typer.Option(None, "--seed", help="Override the config seed")
OUT_OPT = typer.Option(None, "--out", "-o", help="Output directory (default: output.dir)")
SET_OPT = typer.Option(None, "--set", help="Dotted override KEY=VALUE, repeatable (e.g. snn.workers=4)")
VERBOSE_OPT = typer.Option(False, "--verbose", "-v", help="Debug logging")


def _fail(e: Exception):
    typer.echo(f"error: {type(e).__name__}: {e}", err=True)
    raise typer.Exit(1)


def _load(
    config: Optional[Path],
    seed: Optional[int],
    sets: Optional[list[str]],
    verbose: bool,
    rule: Optional[str] = None,
):
    """Build the SimConfig for a command from --config / --seed / --rule / --set."""
    from app.core.config import ConfigError, load_config, parse_override_value

    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    overrides = {}
    for item in sets or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE (got {item!r})")
        overrides[key.strip()] = parse_override_value(value)
    if seed is not None:
        overrides["seed"] = seed
    if rule is not None:
        overrides["plasticity.rule"] = rule
    return load_config(config, overrides), overrides


def _out_dir(cfg, out: Optional[Path]) -> Path:
    return Path(out) if out is not None else cfg.output.dir


@app.command("device-trace")
def device_trace(
    kind: str = typer.Argument(..., help="neuron or synapse"),
    config: Optional[Path] = CONFIG_OPT,
    seed: Optional[int] = SEED_OPT,
    out: Optional[Path] = OUT_OPT,
    sets: Optional[list[str]] = SET_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """Simulate one neuron or synapse device under the configured pulse schedule."""
    from app.pipelines.device_trace import run_device_trace
    from app.pipelines.ledger import record_run

    try:
        cfg, _ = _load(config, seed, sets, verbose)
        out_dir = _out_dir(cfg, out)
        with record_run(cfg.output.ledger_path, "device-trace", cfg, out_dir) as run:
            result = run_device_trace(cfg, kind, out_dir)
            run.summary = {k: v for k, v in result.items() if k != "fire_times"}
    except (ValueError, OSError) as e:
        _fail(e)
    typer.echo(f"{kind} trace: {result['steps']} steps, {result['fire_count']} firings -> {result['csv']}")


@app.command("train")
def train(
    config: Optional[Path] = CONFIG_OPT,
    seed: Optional[int] = SEED_OPT,
    out: Optional[Path] = OUT_OPT,
    rule: Optional[str] = typer.Option(None, "--rule", help="Plasticity rule: stdp or asp"),
    resume: Optional[Path] = typer.Option(None, "--resume", help="Continue from a training checkpoint"),
    max_images: Optional[int] = typer.Option(None, "--max-images", help="Stop after N images (resumable)"),
    sets: Optional[list[str]] = SET_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """Train on the class schedule; writes weight maps, events.csv, checkpoint.ckpt, train_summary.json."""
    from app.pipelines.ledger import record_run
    from app.pipelines.train import run_training

    try:
        cfg, _ = _load(config, seed, sets, verbose, rule)
        out_dir = _out_dir(cfg, out)
        with record_run(cfg.output.ledger_path, "train", cfg, out_dir) as run:
            result = run_training(cfg, out_dir, resume=resume, max_images=max_images)
            run.summary = {k: v for k, v in result.items() if k != "network"}
    except (ValueError, OSError) as e:
        _fail(e)
    if not result["complete"]:
        batch, image = result["position"]
        typer.echo(
            f"Stopped at batch {batch}, image {image} ({result['steps']} steps); "
            f"continue with --resume {out_dir / result['checkpoint']}"
        )
        return
    typer.echo(
        f"Trained {cfg.rule} on classes {result['classes']} ({result['steps']} steps), "
        f"mean weight {result['mean_weight']:.4f} -> {out_dir}"
    )


@app.command("eval")
def evaluate(
    config: Optional[Path] = CONFIG_OPT,
    seed: Optional[int] = SEED_OPT,
    out: Optional[Path] = OUT_OPT,
    checkpoint: Optional[Path] = typer.Option(None, "--checkpoint", help="Checkpoint (default: <out>/checkpoint.ckpt)"),
    untrained: bool = typer.Option(False, "--untrained", help="Evaluate fresh random weights (chance-level control)"),
    sets: Optional[list[str]] = SET_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """Label neurons and classify the test set; writes metrics.csv, predictions.csv, confusion.csv, summary.txt."""
    from app.pipelines.evaluate import run_evaluation
    from app.pipelines.ledger import record_run

    try:
        cfg, _ = _load(config, seed, sets, verbose)
        out_dir = _out_dir(cfg, out)
        if checkpoint is None and not untrained:
            checkpoint = out_dir / "checkpoint.ckpt"
        with record_run(cfg.output.ledger_path, "eval", cfg, out_dir) as run:
            result = run_evaluation(cfg, out_dir, checkpoint=checkpoint, untrained=untrained)
            run.summary = result
    except (ValueError, OSError) as e:
        _fail(e)
    typer.echo(f"Accuracy {result['accuracy']:.4f} on {result['samples']} samples ({result['abstentions']} abstained)")


@app.command("sweep")
def sweep(
    param: str = typer.Option(..., "--param", help="Dotted numeric config key, e.g. neuron.v_spike"),
    values: Optional[str] = typer.Option(None, "--values", help='Comma list, e.g. "0.5,1,2"'),
    range_spec: Optional[str] = typer.Option(None, "--range", help="Inclusive linear range start:stop:n"),
    metric: str = typer.Option("velocity", "--metric", help="velocity, accuracy or mean_weight"),
    config: Optional[Path] = CONFIG_OPT,
    seed: Optional[int] = SEED_OPT,
    out: Optional[Path] = OUT_OPT,
    rule: Optional[str] = typer.Option(None, "--rule", help="Plasticity rule: stdp or asp"),
    sets: Optional[list[str]] = SET_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """Run one seeded trial per value and write sweep_<param>.csv."""
    from app.pipelines.ledger import record_run
    from app.pipelines.sweep import parse_values, run_sweep

    try:
        cfg, overrides = _load(config, seed, sets, verbose, rule)
        out_dir = _out_dir(cfg, out)
        points = parse_values(values, range_spec)
        with record_run(cfg.output.ledger_path, "sweep", cfg, out_dir) as run:
            result = run_sweep(param, points, metric, out_dir, config_path=config, overrides=overrides)
            run.summary = {"csv": result["csv"], "param": param, "metric": metric, "points": len(points)}
    except (ValueError, OSError) as e:
        _fail(e)
    typer.echo(f"Sweep {param}: {len(result['rows'])} points -> {result['csv']}")


@app.command("export-weights")
def export_weights(
    checkpoint: Path = typer.Option(..., "--checkpoint", help="Checkpoint to read"),
    output: Path = typer.Option(Path("weights.pgm"), "--output", help="PGM file to write"),
    grid_cols: Optional[int] = typer.Option(None, "--grid-cols", help="Tiles per row (default: output.grid_cols)"),
    config: Optional[Path] = CONFIG_OPT,
    sets: Optional[list[str]] = SET_OPT,
    verbose: bool = VERBOSE_OPT,
):
    """Write the receptive fields stored in a checkpoint as a tiled PGM image."""
    from app.pipelines.checkpoint import load_checkpoint
    from app.pipelines.exporter import export_weight_map

    try:
        cfg, _ = _load(config, None, sets, verbose)
        net = load_checkpoint(checkpoint, cfg.topology, cfg.snn, cfg.neuron)
        result = export_weight_map(net.weights, grid_cols or cfg.output.grid_cols, output)
    except (ValueError, OSError) as e:
        _fail(e)
    typer.echo(f"Exported {net.topology.n_exc} fields ({result['width']}x{result['height']}) -> {result['path']}")


@app.command("runs")
def runs(
    limit: int = typer.Option(20, "--limit", "-n", help="Rows to show"),
    config: Optional[Path] = CONFIG_OPT,
):
    """List recent runs from the ledger."""
    from app.pipelines.ledger import list_runs

    try:
        cfg, _ = _load(config, None, None, False)
        rows = list_runs(cfg.output.ledger_path, limit=limit)
    except (ValueError, OSError) as e:
        _fail(e)
    if not rows:
        typer.echo("No runs recorded.")
        return
    for r in rows:
        acc = f" acc={r['accuracy']:.4f}" if r["accuracy"] is not None else ""
        typer.echo(
            f"  [{r['id']}] {r['command']:<13} {r['status']:<7} seed={r['seed']} rule={r['rule']}{acc}  {r['out_dir']}"
        )
        if r["error"]:
            typer.echo(f"       {r['error']}")


def main():
    app()


if __name__ == "__main__":
    main()

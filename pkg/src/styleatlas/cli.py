"""Command line entry point.

One subcommand per pipeline stage: train-toy, factorize, traverse, atlas,
fd, serve, analyze, export. Exit codes: 0 success, 1 usage error, 2 runtime
failure. Every subcommand that draws randomness takes --seed.
"""

from __future__ import annotations

import json
import os
import sys
import urllib.request
from importlib import metadata
from pathlib import Path

import click
import numpy as np

from . import analysis, sgw1
from .atlas import AtlasConfig, build_atlas, extract_features
from .factorization import directions_from_json, directions_to_json, sefa, stack_affine, verify_spectrum
from .generator import LatentCode, map_latent
from .metrics import fd_from_feature_sets, sample_images, select_checkpoint
from .study.store import SCHEMA_VERSION
from .training import TrainConfig, procedural_dataset, train
from .traversal import TraversalSpec, render_traversal

try:
    _VERSION = metadata.version("styleatlas")
except metadata.PackageNotFoundError:  # running from a checkout
    _VERSION = "0.0.0"

_VERSION_MESSAGE = (
    f"styleatlas %(version)s (weights format SGW1 v{sgw1.VERSION}, "
    f"response log schema v{SCHEMA_VERSION})"
)


def _interval(text: str) -> tuple:
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise click.BadParameter(f"expected LO:HI, got {text!r}")


@click.group(name="styleatlas")
@click.version_option(version=_VERSION, message=_VERSION_MESSAGE)
def cli():
    """Synthetic-image atlas pipeline: train, factorize, render, score, study."""


@cli.command("train-toy")
@click.option("--steps", type=int, default=None, help="Optimizer steps.")
@click.option("--seed", type=int, default=None, help="Run seed.")
@click.option("--out", "out_dir", type=click.Path(), required=True, help="Checkpoint directory.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON file of training fields; flags override it.")
@click.option("--batch-size", type=int, default=None)
@click.option("--latent-dim", type=int, default=None)
@click.option("--channels", type=int, default=None)
@click.option("--layers", "num_layers", type=int, default=None)
@click.option("--dataset-size", type=int, default=None)
@click.option("--checkpoint-every", type=int, default=None)
def train_toy(out_dir, config_path, **flags):
    """Train the toy generator and write SGW1 checkpoints."""
    fields = {}
    if config_path:
        with open(config_path) as fh:
            fields.update(json.load(fh))
    fields.update({k: v for k, v in flags.items() if v is not None})
    config = TrainConfig(**fields)
    result = train(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for ckpt in result.checkpoints:
        sgw1.save_weights(ckpt.weights, out / f"step{ckpt.step:06d}.sgw1")
    with open(out / "history.json", "w") as fh:
        json.dump(result.history, fh, indent=2)
    first, last = result.checkpoints[0], result.checkpoints[-1]
    click.echo(f"wrote {len(result)} checkpoints to {out}")
    click.echo(f"eval d-loss {first.losses['eval_d_loss']:.4f} -> {last.losses['eval_d_loss']:.4f}")


@cli.command()
@click.option("--weights", "weights_path", type=click.Path(exists=True), required=True)
@click.option("--j", "count", type=int, default=32, help="Number of directions to keep.")
@click.option("--out", "out_path", type=click.Path(), required=True)
def factorize(weights_path, count, out_path):
    """Closed-form attribute directions from the style affine layers."""
    weights = sgw1.load_weights(weights_path)
    a = stack_affine(weights)
    directions = sefa(a, count)
    report = verify_spectrum(a, directions)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w") as fh:
        fh.write(directions_to_json(directions))
    click.echo(f"wrote {len(directions)} directions to {out_path}")
    if not report["ok"]:
        click.echo(f"warning: {len(report['failures'])} directions failed the "
                   f"spectrum check at tolerance {report['tolerance']:g}", err=True)


@cli.command()
@click.option("--weights", "weights_path", type=click.Path(exists=True), required=True)
@click.option("--directions", "directions_path", type=click.Path(exists=True), required=True)
@click.option("--rank", type=int, default=0, help="Direction rank to walk (0 = dominant).")
@click.option("--interval", default="0:50", help="Alpha interval LO:HI.")
@click.option("--step", "step_alpha", type=float, default=2.0, help="Alpha step.")
@click.option("--seed", type=int, default=0, help="Base latent seed.")
@click.option("--psi", type=float, default=1.0, help="Truncation strength.")
@click.option("--noise-seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def traverse(weights_path, directions_path, rank, interval, step_alpha, seed, psi,
             noise_seed, out_dir):
    """Render one traversal strip for a chosen direction."""
    from .atlas import _write_png

    weights = sgw1.load_weights(weights_path)
    directions = directions_from_json(Path(directions_path).read_text())
    by_rank = {d.rank: d for d in directions}
    if rank not in by_rank:
        raise click.BadParameter(f"rank {rank} not in {sorted(by_rank)}", param_hint="--rank")
    rng = np.random.default_rng(seed)
    z = LatentCode(rng.standard_normal(weights.latent_dim), space="Z")
    base_w = map_latent(z, weights, psi=psi)
    spec = TraversalSpec(base_w=base_w, direction=by_rank[rank],
                         interval=_interval(interval), step_alpha=step_alpha)
    images = render_traversal(spec, weights, noise_seed=noise_seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for img in images:
        name = f"dir{rank}_a{img.alpha:g}.png"
        _write_png(out / name, img.pixels)
        files.append(name)
    with open(out / "traverse.json", "w") as fh:
        json.dump({"rank": rank, "interval": list(spec.interval), "step": step_alpha,
                   "seed": seed, "psi": psi, "files": files}, fh, indent=2)
    click.echo(f"wrote {len(files)} frames to {out}")


@cli.command()
@click.option("--weights", "weights_path", type=click.Path(exists=True), required=True)
@click.option("--directions", "directions_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--interval", default="0:40", help="Alpha interval LO:HI.")
@click.option("--count", "images_per_direction", type=int, default=5)
@click.option("--seed", type=int, default=0, help="Base latent seed.")
@click.option("--psi", type=float, default=1.0)
@click.option("--embed/--no-embed", default=False, help="Append a 2-D embedding of the strips.")
def atlas(weights_path, directions_path, out_dir, interval, images_per_direction,
          seed, psi, embed):
    """Render traversal strips for every direction and write the atlas manifest."""
    weights = sgw1.load_weights(weights_path)
    directions = directions_from_json(Path(directions_path).read_text())
    config = AtlasConfig(out_dir=out_dir, interval=_interval(interval),
                         images_per_direction=images_per_direction, base_seed=seed,
                         psi=psi, include_embedding=embed, embed_seed=seed)
    manifest = build_atlas(directions, weights, config)
    sizes = {g: len(v) for g, v in manifest["groups"].items() if v}
    click.echo(f"atlas with {len(manifest['directions'])} directions in {out_dir}")
    click.echo(f"groups: {sizes}" if sizes else "groups: none assigned")


@cli.command()
@click.option("--weights", "weights_path", type=click.Path(exists=True), default=None)
@click.option("--against", "against_path", type=click.Path(exists=True), default=None,
              help="Second generator; default compares against the procedural set.")
@click.option("--checkpoints", "checkpoint_dir", type=click.Path(exists=True), default=None,
              help="Score every *.sgw1 in a directory and pick the best.")
@click.option("--count", type=int, default=200, help="Images per side.")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", type=click.Path(), default=None, help="Write scores JSON.")
def fd(weights_path, against_path, checkpoint_dir, count, seed, out_path):
    """FD (shallow features) between image distributions."""
    if (weights_path is None) == (checkpoint_dir is None):
        raise click.UsageError("pass exactly one of --weights or --checkpoints")
    if checkpoint_dir:
        paths = sorted(Path(checkpoint_dir).glob("*.sgw1"))
        if not paths:
            raise click.UsageError(f"no *.sgw1 files in {checkpoint_dir}")
        ckpts = [sgw1.load_weights(p) for p in paths]
        reals = [img for img, _ in
                 procedural_dataset(count, seed=seed + 1, resolution=ckpts[0].resolution)]
        best, scores = select_checkpoint(ckpts, reals, gen_count=count, seed=seed)
        for p, s in zip(paths, scores):
            click.echo(f"{p.name}: FD (shallow features) = {s:.6f}")
        click.echo(f"best: {paths[best].name}")
        result = {"scores": {p.name: s for p, s in zip(paths, scores)},
                  "best": paths[best].name}
    else:
        weights = sgw1.load_weights(weights_path)
        gen = [extract_features(i) for i in sample_images(weights, count, seed=seed)]
        if against_path:
            other = sgw1.load_weights(against_path)
            ref = [extract_features(i) for i in sample_images(other, count, seed=seed + 1)]
        else:
            data = procedural_dataset(count, seed=seed + 1, resolution=weights.resolution)
            ref = [extract_features(img) for img, _ in data]
        score = fd_from_feature_sets(ref, gen)
        click.echo(f"FD (shallow features) = {score:.6f}")
        result = {"fd_shallow": score}
    if out_path:
        with open(out_path, "w") as fh:
            json.dump(result, fh, indent=2)


@cli.command()
@click.option("--port", type=int, default=8000)
@click.option("--host", default="127.0.0.1")
@click.option("--experiment", "config_path", type=click.Path(exists=True), required=True,
              help="Experiment config JSON.")
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="Response log path; defaults to responses.jsonl next to the config.")
def serve(port, host, config_path, log_path):
    """Run the rating-study HTTP service."""
    import uvicorn

    from .study import Experiment, JsonlStore, SessionManager, create_app

    experiment = Experiment.from_config(config_path)
    if log_path is None:
        log_path = Path(config_path).parent / "responses.jsonl"
    store = JsonlStore(log_path, experiment.id, experiment.config_hash)
    manager = SessionManager(experiment, store)
    app = create_app(manager)
    click.echo(f"serving experiment {experiment.id!r} on {host}:{port}, log at {log_path}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@cli.command()
@click.option("--log", "log_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Report JSON path; CSV tables land beside it.")
def analyze(log_path, out_path):
    """Compute the study statistics from an exported response log."""
    report = analysis.analyze(log_path)
    written = analysis.write_report(report, out_path)
    for p in written:
        click.echo(f"wrote {p}")


@cli.command()
@click.option("--log", "log_path", type=click.Path(exists=True), default=None,
              help="Local response log to copy through.")
@click.option("--url", "base_url", default=None, help="Base URL of a running service.")
@click.option("--experiment", "experiment_id", default=None,
              help="Experiment id, required with --url.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Destination; stdout when omitted.")
def export(log_path, base_url, experiment_id, out_path):
    """Copy a response log out byte for byte, locally or over HTTP."""
    if (log_path is None) == (base_url is None):
        raise click.UsageError("pass exactly one of --log or --url")
    if log_path:
        analysis.load_log(log_path)  # every line must parse before we copy
        data = Path(log_path).read_bytes()
    else:
        if not experiment_id:
            raise click.UsageError("--experiment is required with --url")
        url = f"{base_url.rstrip('/')}/api/experiments/{experiment_id}/export"
        req = urllib.request.Request(url)
        token = os.environ.get("STUDY_ADMIN_TOKEN")
        if token:
            req.add_header("Authorization", f"Bearer {token}")
        with urllib.request.urlopen(req) as resp:
            data = resp.read()
    if out_path:
        Path(out_path).write_bytes(data)
        click.echo(f"wrote {len(data)} bytes to {out_path}")
    else:
        sys.stdout.buffer.write(data)


def run(argv) -> int:
    """Dispatch argv; returns the process exit code instead of raising."""
    try:
        rv = cli.main(args=list(argv), prog_name="styleatlas", standalone_mode=False)
        return 0 if rv is None else int(rv)
    except click.ClickException as exc:
        exc.show()
        no_args_help = getattr(click.exceptions, "NoArgsIsHelpError", ())
        return 0 if isinstance(exc, no_args_help) else 1
    except click.Abort:
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary maps failures to exit 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()

"""Command-line entry points.

Sessions live under the data directory (flag --data-dir or env
VISLABEL_DATA_DIR), one subdirectory per session holding its event log.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .agreement import format_table, krippendorff_alpha_nominal
from .exports import export_dataset, load_export_dir, reliability_from_exports
from .service import DATA_DIR_ENV, DEFAULT_DATA_DIR, create_app
from .session import Session, SessionConfig


@click.group()
@click.option(
    "--data-dir",
    envvar=DATA_DIR_ENV,
    default=DEFAULT_DATA_DIR,
    show_default=True,
    help="Directory holding session logs.",
)
@click.pass_context
def main(ctx, data_dir):
    ctx.obj = Path(data_dir)


@main.command()
@click.option("--manifest", "-m", required=True, type=click.Path(exists=True))
@click.option("--config", "-c", "config_path", required=True, type=click.Path(exists=True))
@click.option("--session-id", default=None, help="Override the config's session id.")
@click.pass_obj
def init(data_dir: Path, manifest, config_path, session_id):
    """Create an interactive session from a manifest and a config file."""
    raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
    raw["manifest"] = manifest
    if session_id:
        raw["session_id"] = session_id
    config = SessionConfig.from_dict(raw)
    session = Session.create(config, data_dir / config.session_id)
    stats = session.stats()
    click.echo(f"session {config.session_id}: {stats['objects']['total']} objects queued")


@main.command("run-sim")
@click.option("--flip-p", default=0.0, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--reference", "-r", required=True, type=click.Path(exists=True))
@click.option("--manifest", "-m", required=True, type=click.Path(exists=True))
@click.option("--session-id", required=True)
@click.option("--feature-dim", default=None, type=int, help="Defaults to the manifest header.")
@click.option("--no-seed-hierarchy", is_flag=True, help="Start from an empty tree.")
@click.pass_obj
def run_sim(data_dir: Path, flip_p, seed, reference, manifest, session_id, feature_dim, no_seed_hierarchy):
    """Run a full simulated-annotator session."""
    if feature_dim is None:
        header = json.loads(Path(manifest).read_text(encoding="utf-8").splitlines()[0])
        feature_dim = header["feature_dim"]
    config = SessionConfig(
        session_id=session_id,
        feature_dim=feature_dim,
        oracle_mode="simulated",
        flip_p=flip_p,
        seed=seed,
        manifest=str(manifest),
        reference=str(reference),
        seed_hierarchy=not no_seed_hierarchy,
    )
    session = Session.create(config, data_dir / session_id)
    stats = session.run_with_oracle(session.build_simulated_oracle())
    click.echo(json.dumps(stats, indent=2))


@main.command()
@click.option("--session", "-s", "session_id", required=True)
@click.option("--out", "-o", required=True, type=click.Path())
@click.pass_obj
def export(data_dir: Path, session_id, out):
    """Write dataset.jsonl, hierarchy.json and transcripts.jsonl."""
    session = Session.open(data_dir / session_id)
    paths = export_dataset(session).write(out)
    for name, path in paths.items():
        click.echo(f"{name}: {path}")


@main.command()
@click.option("--sessions", required=True, help="Comma-separated session ids or export dirs.")
@click.option("--out", "-o", default=None, type=click.Path(), help="Write the JSON report here.")
@click.pass_obj
def alpha(data_dir: Path, sessions, out):
    """Agreement (Krippendorff alpha, nominal) across two or more sessions."""
    bundles = {}
    for token in sessions.split(","):
        token = token.strip()
        as_path = Path(token)
        if (as_path / "dataset.jsonl").exists():
            bundles[token] = load_export_dir(as_path)
        else:
            bundles[token] = export_dataset(Session.open(data_dir / token))
    data = reliability_from_exports(bundles)
    report = krippendorff_alpha_nominal(data)
    click.echo(format_table(report), nl=False)
    if out:
        Path(out).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        click.echo(f"report: {out}")


@main.command()
@click.option("--port", "-p", default=8750, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui", default=None, type=click.Path(exists=True), help="Serve a built console from /ui.")
@click.pass_obj
def serve(data_dir: Path, port, host, ui):
    """Serve the annotation API (and optionally the console)."""
    import uvicorn

    uvicorn.run(create_app(data_dir, ui_dir=ui), host=host, port=port, log_level="info")


if __name__ == "__main__":
    main(sys.argv[1:])

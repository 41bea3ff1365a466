"""Command-line entry points for batch embedding export."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import __version__
from .backends import BackendError, resolve_backend
from .core import AdapterError, AdapterJob, embed_file, embed_labels


@click.group()
@click.version_option(version=__version__, prog_name="jvec-embed")
def main() -> None:
    """Embed text batches and export JVEC vector files."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True),
              help="JSONL rows {id, text}.")
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--model", default="hash:64", show_default=True,
              help="Backend identifier: hash:<dim>, st:<model>, cmd:<program>.")
@click.option("--normalize/--no-normalize", default=True, show_default=True)
def texts(input_path: str, output_path: str, model: str, normalize: bool) -> None:
    """Embed a JSONL text file into a JVEC file."""
    try:
        backend = resolve_backend(model)
        n = embed_file(AdapterJob(Path(input_path), Path(output_path),
                                  backend, normalize))
    except (AdapterError, BackendError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"wrote {n} vectors to {output_path}")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True),
              help="CSV with a code column plus statement columns.")
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--sidecar", "sidecar_path", required=True, type=click.Path(),
              help="Label-set JSON mapping codes to member vector ids.")
@click.option("--model", default="hash:64", show_default=True)
@click.option("--normalize/--no-normalize", default=True, show_default=True)
def labels(input_path: str, output_path: str, sidecar_path: str, model: str,
           normalize: bool) -> None:
    """Embed taxonomy statements and write the label-set sidecar."""
    try:
        backend = resolve_backend(model)
        report = embed_labels(input_path, output_path, sidecar_path, backend,
                              normalize)
    except (AdapterError, BackendError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"wrote {report.n_vectors} vectors to {output_path}")
    for note in report.skipped_cells:
        click.echo(f"skipped: {note}", err=True)
    for code in report.empty_codes:
        click.echo(f"code with no statements: {code}", err=True)


if __name__ == "__main__":
    main()

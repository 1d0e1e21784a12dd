"""Command line entry point for the embedding sidecar."""

from __future__ import annotations

import sys

import click
import uvicorn

from embed_sidecar.encoders import DEFAULT_MODEL, EncoderError, make_encoder
from embed_sidecar.service import create_app


@click.command()
@click.option(
    "--model",
    envvar="EMBED_SIDECAR_MODEL",
    default=DEFAULT_MODEL,
    show_default=True,
    help="Sentence-transformers model id, or hash:<dim> for the dependency-free backend.",
)
@click.option("--host", default="127.0.0.1", show_default=True, help="Interface to bind.")
@click.option(
    "--port",
    envvar="EMBED_SIDECAR_PORT",
    default=8750,
    show_default=True,
    type=int,
    help="Port to bind.",
)
def main(model: str, host: str, port: int) -> None:
    """Serve embeddings over HTTP (POST /embed, GET /health)."""
    try:
        encoder = make_encoder(model)
    except EncoderError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"serving model {encoder.name} (dim {encoder.dim}) on {host}:{port}")
    uvicorn.run(create_app(encoder), host=host, port=port)


if __name__ == "__main__":
    main()

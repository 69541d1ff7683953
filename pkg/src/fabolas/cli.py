"""Command-line client for the experiment service.

Every verb talks to the HTTP API: either a remote server given via --server,
or an in-process instance of the same application when no server is given.
"""

from __future__ import annotations

import sys

import click
import httpx

from .config import config_to_yaml, load_config

_SERVER_OPT = click.option(
    "--server",
    default=None,
    help="Base URL of a running service; defaults to an in-process instance.",
)


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from starlette.testclient import TestClient

    from .service import app

    return TestClient(app, raise_server_exceptions=False)


def _call(server, method, path, **kwargs):
    with _client(server) as client:
        resp = client.request(method, path, **kwargs)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        raise click.ClickException(f"{path} failed ({resp.status_code}): {detail}")
    return resp.json()


@click.group()
def main():
    """Multi-fidelity Bayesian optimization experiments."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--strategy", default=None, help="Override the configured strategy.")
@click.option("--seed", "seeds", multiple=True, type=int, help="Override seed list.")
@click.option("--output-dir", default=None, help="Override the output directory.")
@_SERVER_OPT
def run(config_path, strategy, seeds, output_dir, server):
    """Run the configured experiment, one record file per seed."""
    cfg = load_config(config_path)
    if strategy:
        cfg = cfg.model_copy(update={"strategy": strategy})
    if seeds:
        cfg = cfg.model_copy(update={"seeds": list(seeds)})
    if output_dir:
        cfg = cfg.model_copy(update={"output_dir": output_dir})
    out = _call(server, "POST", "/experiments", json=cfg.model_dump())
    for path in out["record_files"]:
        click.echo(path)


@main.command()
@click.argument("record_files", nargs=-1, required=True)
@click.option("--grid", default=None, help="Comma-separated time points.")
@click.option("--n-points", default=30, show_default=True)
@click.option("--output", default=None, type=click.Path(), help="Write CSV here.")
@_SERVER_OPT
def report(record_files, grid, n_points, output, server):
    """Tabulate incumbent-quality percentiles across seeds over time."""
    body = {"record_files": list(record_files), "n_points": n_points}
    if grid:
        body["grid"] = [float(v) for v in grid.split(",")]
    out = _call(server, "POST", "/report", json=body)
    if output:
        with open(output, "w") as fh:
            fh.write(out["csv"])
        click.echo(output)
    else:
        sys.stdout.write(out["csv"])


@main.command()
@click.argument("record_files", nargs=-1, required=True)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True),
              help="Experiment config supplying the objective to re-evaluate with.")
@click.option("--validation-seed", default=10**6, show_default=True)
@_SERVER_OPT
def validate(record_files, config_path, validation_seed, server):
    """Re-evaluate logged incumbents on the full dataset (true_loss column)."""
    body = {"record_files": list(record_files), "validation_seed": validation_seed}
    if config_path:
        cfg = load_config(config_path)
        body["objective"] = cfg.objective.model_dump()
        body["space"] = cfg.space.model_dump()
    out = _call(server, "POST", "/validate", json=body)
    for path in out["record_files"]:
        click.echo(path)


@main.command("make-surrogate")
@click.option("--output", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@_SERVER_OPT
def make_surrogate(output, seed, server):
    """Generate the pre-measured classifier-grid surrogate table."""
    out = _call(server, "POST", "/surrogate", json={"path": output, "seed": seed})
    click.echo(f"{out['path']} ({out['n_rows']} measurements)")


@main.command("show-config")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def show_config(config_path):
    """Parse, validate, and echo a config in canonical form."""
    click.echo(config_to_yaml(load_config(config_path)), nl=False)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()

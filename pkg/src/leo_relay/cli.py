"""Command-line client for the experiment service.

By default each subcommand runs against an in-process copy of the
service app; pass ``--server`` to talk to a running instance instead.
The CSV body of the response goes to stdout or ``--out`` verbatim, so
identical configs produce byte-identical files either way.

Exit codes: 0 success, 2 config error, 3 infeasible optimization,
4 numeric failure.
"""

from __future__ import annotations

import pathlib
import sys
import warnings
from typing import Optional

import click

_EXIT_CODES = {"config": 2, "infeasible": 3, "numeric": 4}


def _client(server: Optional[str]):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app, raise_server_exceptions=False)


def _experiment_options(fn):
    options = [
        click.option(
            "--config",
            "config_path",
            type=click.Path(exists=True, dir_okay=False),
            default=None,
            help="Path to a key=value config file (defaults apply when omitted).",
        ),
        click.option("--seed", type=click.IntRange(min=0), default=None, help="Override base_seed."),
        click.option(
            "--realizations",
            type=click.IntRange(min=0),
            default=None,
            help="Override num_realizations.",
        ),
        click.option(
            "--out",
            type=click.Path(dir_okay=False, writable=True),
            default=None,
            help="Write the CSV to this path instead of stdout.",
        ),
        click.option("--method", type=click.Choice(["1", "2"]), default=None, help="Hop-count search method."),
        click.option(
            "--alpha2",
            type=click.Choice(["additive", "multiplicative"]),
            default=None,
            help="Interior-hop detour-ratio mode.",
        ),
        click.option(
            "--hops",
            type=click.IntRange(min=0),
            default=None,
            help="Pin the hop count (0 = choose by method).",
        ),
        click.option(
            "--server",
            default=None,
            help="Base URL of a running service; omitted = in-process.",
        ),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _run_operation(
    operation: str,
    config_path: Optional[str],
    seed: Optional[int],
    realizations: Optional[int],
    out: Optional[str],
    method: Optional[str],
    alpha2: Optional[str],
    hops: Optional[int],
    server: Optional[str],
) -> None:
    config_text = ""
    if config_path:
        config_text = pathlib.Path(config_path).read_text(encoding="utf-8")
    overrides: dict[str, object] = {}
    if seed is not None:
        overrides["base_seed"] = seed
    if realizations is not None:
        overrides["num_realizations"] = realizations
    if method is not None:
        overrides["method"] = int(method)
    if alpha2 is not None:
        overrides["alpha2_mode"] = alpha2
    if hops is not None:
        overrides["num_hops"] = hops
    payload = {"config_text": config_text, "overrides": overrides}
    with _client(server) as client:
        response = client.post(f"/v1/{operation}", json=payload)
        if response.status_code != 200:
            try:
                body = response.json()
            except ValueError:
                body = {}
            kind = body.get("kind", "")
            detail = body.get("detail", response.text)
            click.echo(f"error ({kind or response.status_code}): {detail}", err=True)
            sys.exit(_EXIT_CODES.get(kind, 1))
        csv_text = response.json()["csv"]
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text)
    else:
        click.echo(csv_text, nl=False)


@click.group()
def main() -> None:
    """Plan and evaluate multi-hop relay routes on random satellite shells."""


def _register(operation: str, doc: str) -> None:
    @main.command(name=operation, help=doc)
    @_experiment_options
    def _command(**kwargs) -> None:
        _run_operation(operation, **kwargs)


_register("analyze", "Analytic route metrics for one configuration.")
_register("optimize", "Hop-count search with both methods plus the ideal bound.")
_register("simulate", "Monte Carlo metrics for one configuration and strategy.")
_register("table2", "Reference-constellation comparison table.")
_register("sweep", "Analytic metrics over the constellation-parameter grid.")
_register("compare", "Monte Carlo routing-strategy comparison across route angles.")


@main.command()
@click.option("--host", default="127.0.0.1", help="Bind address.")
@click.option("--port", default=8000, type=int, help="Bind port.")
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("leo_relay.service:app", host=host, port=port)


if __name__ == "__main__":
    main()

"""Command-line wrapper: render one figure from a recperf data artifact."""

from __future__ import annotations

import sys

import click

from recperf_plots.io import MissingColumnError, RaggedGridError
from recperf_plots.render import PlotKind, PlotRequest, render


@click.command()
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="CSV or JSON table emitted by recperf.")
@click.option("--kind", required=True, type=click.Choice([k.value for k in PlotKind]))
@click.option("--metric", default="qps", show_default=True, help="Column to plot.")
@click.option("--output", "-o", "output_path", required=True,
              type=click.Path(dir_okay=False), help="Image file to write.")
def main(input_path: str, kind: str, metric: str, output_path: str) -> None:
    request = PlotRequest(input_path=input_path, plot_kind=PlotKind(kind),
                          metric=metric, output_path=output_path)
    try:
        render(request)
    except (MissingColumnError, RaggedGridError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()

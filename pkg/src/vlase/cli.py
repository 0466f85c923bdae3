"""Command-line front end.

Each subcommand marshals its flags into the service request models and
invokes the corresponding handler in-process, so the CLI and the HTTP API
share one implementation; ``vlase serve`` exposes the same handlers over
HTTP. Exit codes: 0 success, 2 configuration/usage error, 3 file format
error, 4 evaluation error, 1 anything unexpected.
"""

from __future__ import annotations

import logging
import sys
from typing import Callable, TypeVar

import click
from pydantic import BaseModel, ValidationError

from .errors import VlaseError
from .service import handlers, models

R = TypeVar("R", bound=BaseModel)

log = logging.getLogger("vlase")


def _run(handler: Callable[..., R], request: BaseModel) -> R:
    try:
        return handler(request)
    except VlaseError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)


def _floats(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}")


def _build(model: type[R], **kwargs) -> R:
    try:
        return model(**kwargs)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(p) for p in first["loc"])
        click.echo(f"error: invalid {loc}: {first['msg']}", err=True)
        sys.exit(2)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log at DEBUG level.")
def main(verbose: bool) -> None:
    """Semantic-edge VLAD localization pipeline."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Output directory.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--locations", default=50, show_default=True, type=int)
@click.option("--passes", default=2, show_default=True, type=int)
@click.option(
    "--scenario",
    default="generic",
    show_default=True,
    type=click.Choice(["generic", "spatial-twin"]),
)
@click.option(
    "--noise",
    default="0,0,0",
    show_default=True,
    help="Capture jitter sigmas: prob,pixel,gps_meters.",
)
@click.option("--width", default=640, show_default=True, type=int)
@click.option("--height", default=360, show_default=True, type=int)
@click.option("--classes", default=19, show_default=True, type=int)
@click.option("--density", default=60.0, show_default=True, type=float,
              help="Expected edge pixels per image.")
@click.option("--step-m", default=10.0, show_default=True, type=float,
              help="Route step length in meters.")
def synth(out_dir, seed, locations, passes, scenario, noise, width, height,
          classes, density, step_m):
    """Generate synthetic capture passes (feature files + geotag CSVs)."""
    sigmas = _floats(noise)
    if len(sigmas) != 3:
        raise click.BadParameter("--noise needs three values: prob,pixel,gps")
    req = _build(
        models.SynthRequest,
        out_dir=out_dir,
        seed=seed,
        locations=locations,
        passes=passes,
        scenario=scenario,
        noise=models.NoiseModel(
            prob_sigma=sigmas[0], pixel_sigma=sigmas[1], gps_sigma_m=sigmas[2]
        ),
        width=width,
        height=height,
        classes=classes,
        density=density,
        step_m=step_m,
    )
    resp = _run(handlers.handle_synth, req)
    for p in resp.passes:
        click.echo(f"pass {p.pass_id}: {p.num_images} images -> {p.features_dir}")


@main.command()
@click.option("--features", "features_dir", required=True, type=click.Path())
@click.option("--clusters", default=64, show_default=True, type=int)
@click.option("--alpha", default=0.1, show_default=True, type=float,
              help="Class-block weight; spatial block gets 1-alpha.")
@click.option("--te", "threshold", default=0.5, show_default=True, type=float,
              help="Edge probability threshold.")
@click.option("--mask", default="all", show_default=True,
              help="Class mask: all|static|bld-sky|veg-sky|veg-bld-sky|"
                   "remove:<class>|indices (e.g. 0,5,7).")
@click.option("--no-spatial", is_flag=True, help="Drop the coordinate features.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--epochs", default=10, show_default=True, type=int)
@click.option("--tol", default=1e-4, show_default=True, type=float)
@click.option("--out", "out_path", required=True, type=click.Path())
def train(features_dir, clusters, alpha, threshold, mask, no_spatial, seed,
          epochs, tol, out_path):
    """Train a VLAD codebook over a directory of feature files."""
    req = _build(
        models.TrainRequest,
        features_dir=features_dir,
        out_path=out_path,
        clusters=clusters,
        alpha=alpha,
        threshold=threshold,
        mask=mask,
        spatial=not no_spatial,
        seed=seed,
        epochs=epochs,
        tol=tol,
    )
    resp = _run(handlers.handle_train, req)
    click.echo(
        f"trained {resp.clusters} clusters (dim {resp.dim}) on "
        f"{resp.num_features} features from {resp.num_images} images in "
        f"{resp.epochs_run} epochs -> {resp.out_path}"
    )


@main.command()
@click.option("--features", "features_dir", required=True, type=click.Path())
@click.option("--geotags", "geotags_csv", required=True, type=click.Path())
@click.option("--codebook", "codebook_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
def index(features_dir, geotags_csv, codebook_path, out_path):
    """Build the geo-tagged descriptor database for a mapping pass."""
    req = _build(
        models.IndexRequest,
        features_dir=features_dir,
        geotags_csv=geotags_csv,
        codebook_path=codebook_path,
        out_path=out_path,
    )
    resp = _run(handlers.handle_index, req)
    click.echo(
        f"indexed {resp.num_records} images ({resp.num_empty} empty) -> "
        f"{resp.out_path}"
    )


@main.command()
@click.option("--index", "index_path", required=True, type=click.Path())
@click.option("--codebook", "codebook_path", required=True, type=click.Path())
@click.option("--features", "features_dir", required=True, type=click.Path())
@click.option("--top", "top_n", default=5, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def query(index_path, codebook_path, features_dir, top_n, out_path):
    """Retrieve the top-N nearest database images for each query image."""
    req = _build(
        models.QueryRequest,
        index_path=index_path,
        codebook_path=codebook_path,
        features_dir=features_dir,
        top_n=top_n,
        out_path=out_path,
    )
    resp = _run(handlers.handle_query, req)
    click.echo(f"queried {resp.num_queries} images -> {resp.out_path}")


@main.command("eval")
@click.option("--results", "results_csv", required=True, type=click.Path())
@click.option("--truth", "truth_csv", required=True, type=click.Path())
@click.option("--k", "ks", default="1,5", show_default=True,
              help="Comma-separated top-k values.")
@click.option("--thresholds", default="5,10,20", show_default=True,
              help="Comma-separated distance thresholds in meters.")
@click.option("--out", "out_path", required=True, type=click.Path())
def eval_cmd(results_csv, truth_csv, ks, thresholds, out_path):
    """Score retrieval results against ground-truth geotags."""
    req = _build(
        models.EvalRequest,
        results_csv=results_csv,
        truth_csv=truth_csv,
        ks=_ints(ks),
        thresholds_m=_floats(thresholds),
        out_path=out_path,
    )
    resp = _run(handlers.handle_eval, req)
    click.echo(resp.table)
    click.echo(f"report -> {resp.out_path}")


@main.command()
@click.option("--features", "features_dir", required=True, type=click.Path())
@click.option("--geotags", "geotags_csv", required=True, type=click.Path())
@click.option("--query-features", "query_features_dir", required=True,
              type=click.Path())
@click.option("--query-geotags", "query_geotags_csv", required=True,
              type=click.Path())
@click.option("--masks", default="all", show_default=True,
              help="Comma-separated mask specs (use + inside index lists).")
@click.option("--alphas", default="0.1", show_default=True,
              help="Comma-separated alpha values.")
@click.option("--clusters", default=64, show_default=True, type=int)
@click.option("--te", "threshold", default=0.5, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--epochs", default=10, show_default=True, type=int)
@click.option("--tol", default=1e-4, show_default=True, type=float)
@click.option("--top", "top_n", default=5, show_default=True, type=int)
@click.option("--k", "ks", default="1,5", show_default=True)
@click.option("--thresholds", default="5,10,20", show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def ablate(features_dir, geotags_csv, query_features_dir, query_geotags_csv,
           masks, alphas, clusters, threshold, seed, epochs, tol, top_n, ks,
           thresholds, out_dir):
    """Sweep mask/alpha combinations: train, index, query, and score each."""
    req = _build(
        models.AblateRequest,
        features_dir=features_dir,
        geotags_csv=geotags_csv,
        query_features_dir=query_features_dir,
        query_geotags_csv=query_geotags_csv,
        out_dir=out_dir,
        masks=[m.strip() for m in masks.split(",") if m.strip()],
        alphas=_floats(alphas),
        clusters=clusters,
        threshold=threshold,
        seed=seed,
        epochs=epochs,
        tol=tol,
        top_n=top_n,
        ks=_ints(ks),
        thresholds_m=_floats(thresholds),
    )
    resp = _run(handlers.handle_ablate, req)
    click.echo(f"ablation sweep -> {resp.csv_path}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()

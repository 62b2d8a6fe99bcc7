"""Command-line interface.

    prior-forge fit --model M --judgements F.json --optimizer natgrad --seed 0 --out R.json
    prior-forge simulate --model M --alpha 1000 --spec S.json --seed 0 --out J.json
    prior-forge experiments run NAME [--config C.json] [--out-dir DIR]
    prior-forge serve --port 8714 --data-dir DIR
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from .errors import PriorForgeError
from .experiments import (ExperimentSpec, EXPERIMENT_NAMES, default_spec,
                          run_experiment)
from .judgements import JudgementSet, sample_judgements
from .models import create_model, model_names
from .optimizers import OptimizerConfig, fit
from .partition import CovariateSet, Partition
from .sessions import DATA_DIR_ENV
from .transforms import HyperParams

_OPTIMIZERS = {
    "natgrad": "natural-gradient",
    "stoch-natgrad": "stochastic-natural-gradient",
    "nelder-mead": "nelder-mead",
}


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _dump_json(doc: dict, path: str | None) -> None:
    payload = json.dumps(doc, sort_keys=True, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(payload)
    else:
        click.echo(payload)


def _model_options(model: str, judgements: JudgementSet | None, raw: str | None) -> dict:
    opts = json.loads(raw) if raw else {}
    if model == "probit-glm" and "n_coefficients" not in opts and judgements:
        opts["n_coefficients"] = len(judgements.items[0].covariate.x)
    return opts


@click.group()
def main():
    """Prior elicitation from judgements about observable data."""


@main.command("fit")
@click.option("--model", "model_name", required=True,
              type=click.Choice(model_names()))
@click.option("--judgements", "judgements_path", required=True,
              type=click.Path(exists=True))
@click.option("--optimizer", type=click.Choice(sorted(_OPTIMIZERS)),
              default="natgrad", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="OptimizerConfig overrides as JSON.")
@click.option("--model-options", "model_options_raw", default=None,
              help="Model constructor options as inline JSON.")
def fit_cmd(model_name, judgements_path, optimizer, seed, out_path,
            config_path, model_options_raw):
    """Fit hyperparameters to a judgement file."""
    judgements = JudgementSet.from_json(_load_json(judgements_path))
    opts = _model_options(model_name, judgements, model_options_raw)
    model = create_model(model_name, **opts)
    overrides = _load_json(config_path) if config_path else {}
    overrides.update({"method": _OPTIMIZERS[optimizer], "seed": seed})
    config = OptimizerConfig.from_json(overrides)
    try:
        result = fit(judgements, model, config)
    except PriorForgeError as exc:
        raise click.ClickException(str(exc)) from exc
    _dump_json(result.to_json(), out_path)


@main.command("simulate")
@click.option("--model", "model_name", required=True,
              type=click.Choice(model_names()))
@click.option("--alpha", type=float, required=True)
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True),
              help="JSON with partitions, covariates, optional hyperparams.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--model-options", "model_options_raw", default=None)
def simulate_cmd(model_name, alpha, spec_path, seed, out_path, model_options_raw):
    """Sample synthetic judgements from the Dirichlet model."""
    doc = _load_json(spec_path)
    opts = _model_options(model_name, None, model_options_raw)
    if model_name == "probit-glm" and "n_coefficients" not in opts:
        covs = doc.get("covariates", [])
        if covs:
            opts["n_coefficients"] = len(covs[0].get("x", []))
    model = create_model(model_name, **opts)
    partitions = [Partition.from_json(p) for p in doc["partitions"]]
    covariates = [CovariateSet.from_json(c) for c in doc.get(
        "covariates", [{"x": [], "label": f"j{i}"} for i in range(len(partitions))])]
    if len(partitions) == 1 and len(covariates) > 1:
        partitions = partitions * len(covariates)
    if "hyperparams" in doc:
        lam = HyperParams(model.hyperparam_spec(),
                          np.asarray(doc["hyperparams"], dtype=float))
    else:
        lam = model.default_hyperparams()
    try:
        out = sample_judgements(alpha, lam, model, partitions, covariates,
                                seed=seed)
    except PriorForgeError as exc:
        raise click.ClickException(str(exc)) from exc
    _dump_json(out.to_json(), out_path)


@main.group("experiments")
def experiments_group():
    """Reproduce the simulation studies."""


@experiments_group.command("run")
@click.argument("name", type=click.Choice(EXPERIMENT_NAMES))
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="ExperimentSpec overrides as JSON.")
@click.option("--out-dir", type=click.Path(), default=".", show_default=True)
def experiments_run(name, config_path, out_dir):
    """Run one named experiment, writing CSV and JSON result files."""
    import os
    if config_path:
        doc = _load_json(config_path)
        doc["name"] = name
        spec = ExperimentSpec.from_json(doc)
    else:
        spec = default_spec(name)
    try:
        result = run_experiment(spec)
    except PriorForgeError as exc:
        raise click.ClickException(str(exc)) from exc
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, f"{name}.json")
    csv_path = os.path.join(out_dir, f"{name}.csv")
    with open(json_path, "wb") as fh:
        fh.write(result.to_json_bytes())
    with open(csv_path, "wb") as fh:
        fh.write(result.to_csv_bytes())
    click.echo(f"wrote {json_path} and {csv_path} ({len(result.rows)} rows)")


@main.command("serve")
@click.option("--port", type=int, default=8714, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default=None,
              help=f"Session directory (or ${DATA_DIR_ENV}).")
def serve_cmd(port, host, data_dir):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(data_dir), host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())

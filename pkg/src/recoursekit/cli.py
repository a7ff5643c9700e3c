"""Command-line entry point: audit | flipset | analyze | calibrate | serve.

Reports are written atomically (temp file + rename) so a failing run never
leaves a partial report, and identical inputs produce byte-identical output
files. Exit codes: 0 success, 1 input error, 2 internal error.
"""

from __future__ import annotations

import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Mapping

import click
import numpy as np

from .actions import ActionSetSpec, action_set_from_document, fit_percentiles
from .analysis import disparity_report, expected_cost_bound, recourse_guarantee_check, verify_bound
from .audit import run_audit
from .costs import VARIANTS, CostSpec
from .errors import InputError, ParseError
from .flipset import enumerate_actions, render_flipset
from .model import (
    LinearModel,
    align_dataset,
    calibrate_threshold,
    load_dataset,
    load_model,
    model_to_document,
)
from .serialize import dumps_canonical
from .solver import build_problem

TABLE_VARIANTS = [v for v in VARIANTS if v != "l2"]


def _write_atomic(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_actions(path: str, grid_size: int) -> ActionSetSpec:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from None
    return action_set_from_document(doc, default_grid_size=grid_size)


def _load_weights(path: str | None) -> Mapping[str, float] | None:
    if path is None:
        return None
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from None
    if not isinstance(doc, Mapping):
        raise ParseError(f"{path}: weights file must be a JSON object of feature: weight")
    return doc


def _load_point(model: LinearModel, path: str) -> np.ndarray:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from None
    if not isinstance(doc, Mapping):
        raise ParseError(f"{path}: point file must be a JSON object of feature: value")
    values = []
    for name in model.feature_names:
        if name not in doc:
            raise InputError(f"{path}: point is missing feature '{name}'")
        values.append(float(doc[name]))
    return np.asarray(values)


SCHEMA_HELP = """\b
Document formats:
  model JSON    {"intercept": number,
                 "coefficients": {feature: number, ...}}
  dataset CSV   header row; decimal values; optional +/-1 label column
                named via --label-column
  actions JSON  [{"name", "kind": "real"|"integer"|"binary", "lb", "ub",
                  "actionability": "fixed"|"any"|"increase_only"|
                                   "decrease_only",
                  "grid_size"?, "linked_group"?}, ...]
  weights JSON  {feature: positive number, ...}
  point JSON    {feature: value, ...}
"""


@click.group(epilog=SCHEMA_HELP)
def cli() -> None:
    """Recourse tooling for linear classifiers.

    Certifies whether negatively predicted individuals can flip a linear
    model's decision through feasible feature changes, at what cost, and by
    which exact changes.
    """


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--actions", "actions_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--cost", type=click.Choice(list(VARIANTS)), default="max_pct", show_default=True)
@click.option("--weights", "weights_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--label-column", default=None, help="Name of the +/-1 label column in the CSV.")
@click.option("--percentile-data", type=click.Path(exists=True, dir_okay=False),
              help="Population CSV for percentile fitting (defaults to --data).")
@click.option("--margin", type=float, default=0.0, show_default=True,
              help="Extra score slack demanded beyond the decision boundary.")
@click.option("--grid-size", type=int, default=100, show_default=True,
              help="Default action steps for real features without an explicit grid_size.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", "out_prefix", required=True,
              help="Output prefix; writes <prefix>.json and <prefix>.csv.")
def audit(model_path, data_path, actions_path, cost, weights_path, label_column,
          percentile_data, margin, grid_size, jobs, out_prefix) -> None:
    """Audit recourse for every negatively predicted row of a dataset."""
    model = load_model(model_path)
    data = load_dataset(data_path, label_column=label_column)
    spec = _load_actions(actions_path, grid_size)
    cost_spec = CostSpec(variant=cost, weights=_load_weights(weights_path))
    pct_source = load_dataset(percentile_data) if percentile_data else data
    percentiles = fit_percentiles(pct_source)
    report = run_audit(model, data, spec, cost_spec, percentiles, margin=margin, jobs=jobs)
    _write_atomic(Path(f"{out_prefix}.json"), report.to_json())
    _write_atomic(Path(f"{out_prefix}.csv"), report.to_csv())
    rate = report.feasibility_rate
    click.echo(
        f"audited {report.n_audited} rows: feasibility rate "
        f"{'n/a' if rate is None else f'{rate:.4f}'}, reports at {out_prefix}.json/.csv"
    )


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--actions", "actions_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--point", "point_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON object of feature: value.")
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False),
              help="Dataset CSV (for --row and for percentile fitting).")
@click.option("--row", type=int, default=None, help="Row index into --data to explain.")
@click.option("--cost", type=click.Choice(list(VARIANTS)), default="linear", show_default=True)
@click.option("--weights", "weights_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--label-column", default=None)
@click.option("--percentile-data", type=click.Path(exists=True, dir_okay=False))
@click.option("--items", "n_items", type=int, default=5, show_default=True)
@click.option("--margin", type=float, default=0.0, show_default=True)
@click.option("--grid-size", type=int, default=100, show_default=True)
@click.option("--out", "out_prefix", default=None,
              help="Output prefix; writes <prefix>.txt and <prefix>.json. Prints when omitted.")
def flipset(model_path, actions_path, point_path, data_path, row, cost, weights_path,
            label_column, percentile_data, n_items, margin, grid_size, out_prefix) -> None:
    """List minimal-cost actions that flip one point's prediction."""
    model = load_model(model_path)
    spec = _load_actions(actions_path, grid_size)
    if (point_path is None) == (row is None):
        raise InputError("provide exactly one of --point or --data with --row")
    data = load_dataset(data_path, label_column=label_column) if data_path else None
    if point_path is not None:
        x = _load_point(model, point_path)
    else:
        if data is None:
            raise InputError("--row requires --data")
        if not (0 <= row < data.n):
            raise InputError(f"row {row} is out of range for a dataset with {data.n} rows")
        x = align_dataset(data, model).rows[row]

    cost_spec = CostSpec(variant=cost, weights=_load_weights(weights_path))
    percentiles = None
    if cost in ("max_pct", "total_log_pct"):
        pct_source = load_dataset(percentile_data) if percentile_data else data
        if pct_source is None:
            raise InputError(
                f"cost variant '{cost}' needs a population; pass --data or --percentile-data"
            )
        percentiles = fit_percentiles(pct_source)

    problem = build_problem(model, x, spec, cost_spec, percentiles, margin=margin)
    fs = enumerate_actions(problem, n_items)
    doc = render_flipset(fs, prediction_score=problem.score())
    if out_prefix is None:
        click.echo(doc.text, nl=False)
    else:
        _write_atomic(Path(f"{out_prefix}.txt"), doc.text)
        _write_atomic(Path(f"{out_prefix}.json"), doc.to_json())
        click.echo(f"flipset with {len(fs.items)} item(s) at {out_prefix}.txt/.json")


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--actions", "actions_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--label-column", default=None)
@click.option("--group", "group_column", default=None,
              help="Dataset column whose values define protected groups.")
@click.option("--matching", type=click.Choice(["none", "by_label_and_score_band"]),
              default="none", show_default=True)
@click.option("--cost", type=click.Choice(TABLE_VARIANTS), default="max_pct", show_default=True)
@click.option("--margin", type=float, default=0.0, show_default=True)
@click.option("--grid-size", type=int, default=100, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", "out_path", required=True, help="Output JSON path.")
def analyze(model_path, data_path, actions_path, label_column, group_column, matching,
            cost, margin, grid_size, jobs, out_path) -> None:
    """Guarantee screen, expected-cost bound, and optional group disparities."""
    model = load_model(model_path)
    data = load_dataset(data_path, label_column=label_column)
    spec = _load_actions(actions_path, grid_size)
    result: dict = {"guarantee": recourse_guarantee_check(model, spec).to_json_dict()}
    if data.labels is not None:
        result["expected_cost_bound"] = expected_cost_bound(model, data, spec).to_json_dict()
        result["bound_check"] = verify_bound(model, data, spec).to_json_dict()
    if group_column is not None:
        groups = [str(v) for v in data.column(group_column)]
        percentiles = fit_percentiles(data)
        cost_spec = CostSpec(variant=cost)
        report = run_audit(model, data, spec, cost_spec, percentiles, margin=margin, jobs=jobs)
        result["disparity"] = disparity_report(report.records, groups, matching).to_json_dict()
    _write_atomic(Path(out_path), dumps_canonical(result))
    click.echo(f"analysis written to {out_path}")


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--label-column", default=None)
@click.option("--rate", type=float, required=True,
              help="Target fraction of rows predicted +1, in (0, 1).")
@click.option("--out", "out_path", required=True, help="Path for the recalibrated model JSON.")
def calibrate(model_path, data_path, label_column, rate, out_path) -> None:
    """Shift the model intercept so a target fraction of rows is approved."""
    model = load_model(model_path)
    data = load_dataset(data_path, label_column=label_column)
    adjusted = calibrate_threshold(model, data, rate)
    _write_atomic(Path(out_path), dumps_canonical(model_to_document(adjusted)))
    click.echo(f"intercept {model.intercept} -> {adjusted.intercept}, written to {out_path}")


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--actions", "actions_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Population CSV used to fit percentile costs.")
@click.option("--label-column", default=None)
@click.option("--grid-size", type=int, default=100, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--frontend", "frontend_dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="Directory of built explorer assets to serve at /.")
def serve(model_path, actions_path, data_path, label_column, grid_size, host, port,
          frontend_dir) -> None:
    """Serve the HTTP API (and the explorer UI when assets are available)."""
    import uvicorn

    from .service import create_app

    model = load_model(model_path)
    spec = _load_actions(actions_path, grid_size)
    data = load_dataset(data_path, label_column=label_column)
    app = create_app(model, spec, fit_percentiles(data), frontend_dir=frontend_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except (InputError, ParseError) as e:
        click.echo(f"error: {e}", err=True)
        return 1
    except Exception as e:  # pragma: no cover - defensive
        click.echo(f"internal error: {e}", err=True)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()

"""Command-line interface: train, score, evaluate, sweep, ftest and
kernel dumping. Machine output is JSON/CSV on stdout or files; human
diagnostics go to stderr. Exit codes: 0 success, 1 metric error, 2 I/O."""

import csv
import json
import os
import sys

import click
import numpy as np

from .config import Config, load_config
from .errors import HsriqmError
from .evaluation import (
    evaluate,
    f_test,
    read_manifest,
    weight_sweep,
)
from .imgio import load_image, save_pgm
from .metric import HierarchicalStructuralMetric


def _log(msg):
    print(msg, file=sys.stderr)


def _fail(exc):
    if isinstance(exc, (IOError, OSError)) and not isinstance(exc, HsriqmError):
        _log(f"error: {exc}")
        sys.exit(2)
    _log(f"error: {exc}")
    sys.exit(1)


def _load_effective_config(config_path, overrides):
    cfg = load_config(config_path) if config_path else Config()
    cleaned = {k: v for k, v in overrides.items() if v is not None}
    return cfg.replace(**cleaned) if cleaned else cfg


def _require_file(path, what):
    if not os.path.exists(path):
        _log(f"error: {what} not found: {path}")
        sys.exit(2)


@click.group()
def main():
    """Hierarchical structural quality metric for synthesized views."""


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="override config seed")
def train(manifest_path, config_path, out_path, seed):
    """Train codebook, dictionary, SVR and normalization from a manifest."""
    _require_file(manifest_path, "manifest")
    try:
        cfg = _load_effective_config(config_path, {"seed": seed})
        rows = read_manifest(manifest_path)
        for row in rows:
            _require_file(row.ref, "reference image")
            _require_file(row.deg, "degraded image")
        pairs = [(load_image(r.ref), load_image(r.deg)) for r in rows]
        dmos = [r.dmos for r in rows]
        groups = [r.group for r in rows]
        model = HierarchicalStructuralMetric(config=cfg).fit(pairs, dmos, groups)
        model.save(out_path)
        scores = np.asarray(model.cv_scores_)
        valid = scores[np.isfinite(scores)]
        _log(
            "held-out PCC distribution: "
            f"min={valid.min():.4f} median={np.median(valid):.4f} "
            f"max={valid.max():.4f} (selected round {model.cv_round_})"
        )
        _log(f"model written to {out_path}")
    except Exception as exc:  # noqa: BLE001 - single exit point for exit codes
        _fail(exc)


@main.command()
@click.option("--ref", "ref_path", required=True, type=click.Path())
@click.option("--deg", "deg_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--json", "json_path", type=click.Path(), default=None,
              help="write the report here instead of stdout")
@click.option("--dump-debug", "debug_dir", type=click.Path(), default=None)
def score(ref_path, deg_path, model_path, json_path, debug_dir):
    """Score one reference/degraded pair; prints a ScoreReport as JSON."""
    for path, what in ((ref_path, "reference image"), (deg_path, "degraded image"),
                       (model_path, "model file")):
        _require_file(path, what)
    try:
        model = HierarchicalStructuralMetric.load(model_path)
        ref = load_image(ref_path)
        deg = load_image(deg_path)
        report = model.score_pair(ref, deg)
        if debug_dir:
            _dump_debug(model, ref, deg, debug_dir)
        text = report.to_json()
        if json_path:
            with open(json_path, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    except Exception as exc:
        _fail(exc)


def _dump_debug(model, ref, deg, debug_dir):
    os.makedirs(debug_dir, exist_ok=True)
    for name, img in (("ref", ref), ("deg", deg)):
        filtered = model._bilateral(img)
        cmap = model._canny(filtered)
        save_pgm(os.path.join(debug_dir, f"contours_{name}.pgm"),
                 cmap.astype(np.float64))
    save_pgm(os.path.join(debug_dir, "kernels.pgm"),
             _kernel_mosaic(model.coder_.dictionary_.kernels))


def _kernel_mosaic(kernels):
    k, s, _ = kernels.shape
    cols = int(np.ceil(np.sqrt(k)))
    rows = int(np.ceil(k / cols))
    mosaic = np.zeros((rows * (s + 1) + 1, cols * (s + 1) + 1))
    lo, hi = kernels.min(), kernels.max()
    span = hi - lo if hi > lo else 1.0
    for i in range(k):
        r, c = divmod(i, cols)
        tile = (kernels[i] - lo) / span
        mosaic[
            1 + r * (s + 1) : 1 + r * (s + 1) + s,
            1 + c * (s + 1) : 1 + c * (s + 1) + s,
        ] = tile
    return mosaic


@main.command("evaluate")
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--out-dir", "out_dir", required=True, type=click.Path())
@click.option("--jobs", type=int, default=1)
def evaluate_cmd(manifest_path, model_path, out_dir, jobs):
    """Score a manifest and report PCC/SCC/RMSE with per-pair residuals."""
    _require_file(manifest_path, "manifest")
    _require_file(model_path, "model file")
    try:
        model = HierarchicalStructuralMetric.load(model_path)
        rows = read_manifest(manifest_path)
        report, pair_rows = evaluate(rows, model, jobs=jobs, log=_log)
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(os.path.join(out_dir, "residuals.csv"), "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(pair_rows[0].keys()))
            writer.writeheader()
            writer.writerows(pair_rows)
        _log(
            f"PCC {report['pcc']:.4f}  SCC {report['scc']:.4f}  "
            f"RMSE {report['rmse']:.4f}  ({report['n_pairs']} pairs)"
        )
        print(f"PCC {report['pcc']:.4f}")
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--step", type=float, default=0.05)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--jobs", type=int, default=1)
def sweep(manifest_path, model_path, step, out_path, jobs):
    """Evaluate every pooling-weight configuration on the simplex grid."""
    _require_file(manifest_path, "manifest")
    _require_file(model_path, "model file")
    try:
        model = HierarchicalStructuralMetric.load(model_path)
        rows = read_manifest(manifest_path)
        table = weight_sweep(rows, model, step=step, jobs=jobs, log=_log)
        with open(out_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(table[0].keys()))
            writer.writeheader()
            writer.writerows(table)
        _log(f"{len(table)} grid points written to {out_path}")
    except Exception as exc:
        _fail(exc)


def _read_residuals(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        col = "residual" if "residual" in (reader.fieldnames or ()) else None
        if col is None:
            raise HsriqmError(f"{path} has no 'residual' column")
        return np.array([float(rec[col]) for rec in reader])


@main.command()
@click.option("--residuals-a", "path_a", required=True, type=click.Path(),
              help="residuals of the proposed metric")
@click.option("--residuals-b", "path_b", required=True, type=click.Path(),
              help="residuals of the competitor")
@click.option("--alpha", type=float, default=0.05)
def ftest(path_a, path_b, alpha):
    """Variance-ratio F-test between two residuals.csv files."""
    _require_file(path_a, "residuals file")
    _require_file(path_b, "residuals file")
    try:
        res_a = _read_residuals(path_a)
        res_b = _read_residuals(path_b)
        significant, f_stat = f_test(res_a, res_b, alpha=alpha)
        verdict = "significant" if significant else "not significant"
        print(f"{verdict}, F={f_stat:.3f}")
    except Exception as exc:
        _fail(exc)


@main.command("dump-kernels")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
def dump_kernels(model_path, out_path):
    """Write the learned dictionary as a PGM mosaic."""
    _require_file(model_path, "model file")
    try:
        model = HierarchicalStructuralMetric.load(model_path)
        save_pgm(out_path, _kernel_mosaic(model.coder_.dictionary_.kernels))
        _log(f"kernel mosaic written to {out_path}")
    except Exception as exc:
        _fail(exc)


if __name__ == "__main__":
    main()

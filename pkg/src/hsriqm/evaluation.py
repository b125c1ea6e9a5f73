"""Correlation protocol: manifest ingestion, 5-parameter logistic mapping
of objective scores onto the subjective scale, PCC/SCC/RMSE, residual
F-test and the pooling-weight sweep."""

import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ArgumentError, UndefinedStatisticError
from .imgio import load_image
from .metric import normalize, pool

MANIFEST_FIELDS = ("ref", "deg", "dmos", "group")


@dataclass(frozen=True)
class ManifestRow:
    ref: str
    deg: str
    dmos: float
    group: str


def read_manifest(path):
    """Load a `ref,deg,dmos,group` CSV; paths resolve relative to it."""
    base = os.path.dirname(os.path.abspath(path))
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(MANIFEST_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ArgumentError(f"manifest missing columns: {sorted(missing)}")
        for rec in reader:
            dmos = float(rec["dmos"])
            if not np.isfinite(dmos):
                raise ArgumentError(f"non-finite DMOS in manifest row {rec}")
            rows.append(
                ManifestRow(
                    ref=os.path.join(base, rec["ref"]),
                    deg=os.path.join(base, rec["deg"]),
                    dmos=dmos,
                    group=rec["group"],
                )
            )
    return rows


# -- nonlinear subjective mapping -----------------------------------------


def logistic_apply(params, scores):
    b1, b2, b3, b4, b5 = params
    t = np.clip(b2 * (np.asarray(scores, dtype=np.float64) - b3), -500.0, 500.0)
    u = 1.0 / (1.0 + np.exp(t))
    return b1 * (0.5 - u) + b4 * np.asarray(scores) + b5


def _logistic_jacobian(params, scores):
    b1, b2, b3, _, _ = params
    s = np.asarray(scores, dtype=np.float64)
    t = np.clip(b2 * (s - b3), -500.0, 500.0)
    e = np.exp(t)
    u = 1.0 / (1.0 + e)
    du_db2 = -(u**2) * (s - b3) * e
    du_db3 = (u**2) * b2 * e
    jac = np.stack(
        [0.5 - u, -b1 * du_db2, -b1 * du_db3, s, np.ones_like(s)], axis=1
    )
    return jac


def logistic_fit(objective, dmos, max_iter=500, tol=1e-10):
    """Least-squares fit of the 5-parameter monotone mapping by a damped
    Gauss-Newton (Levenberg) scheme; returns the best-iterate parameters."""
    s = np.asarray(objective, dtype=np.float64)
    y = np.asarray(dmos, dtype=np.float64)
    if len(s) != len(y) or len(s) < 6:
        raise ArgumentError("logistic fit needs at least 6 aligned pairs")
    std_s = s.std()
    params = np.array(
        [
            y.max() - y.min(),
            1.0 / std_s if std_s > 0 else 1.0,
            s.mean(),
            0.0,
            y.mean(),
        ]
    )

    def sse(p):
        r = logistic_apply(p, s) - y
        return float(r @ r)

    best_params, best_sse = params.copy(), sse(params)
    damping = 1e-3
    cur_sse = best_sse
    for _ in range(max_iter):
        r = logistic_apply(params, s) - y
        jac = _logistic_jacobian(params, s)
        jtj = jac.T @ jac
        jtr = jac.T @ r
        accepted = False
        for _ in range(50):
            lhs = jtj + damping * (np.diag(np.diag(jtj)) + 1e-12 * np.eye(5))
            try:
                delta = np.linalg.solve(lhs, -jtr)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            trial = params + delta
            trial_sse = sse(trial)
            if np.isfinite(trial_sse) and trial_sse <= cur_sse:
                params = trial
                damping = max(damping / 3.0, 1e-12)
                accepted = True
                break
            damping *= 10.0
        if not accepted:
            break
        converged = abs(cur_sse - trial_sse) <= tol * max(1.0, cur_sse)
        cur_sse = trial_sse
        if cur_sse < best_sse:
            best_params, best_sse = params.copy(), cur_sse
        if converged:
            break
    return best_params


# -- correlation statistics ------------------------------------------------


def pcc(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) != len(b) or len(a) < 2:
        raise ArgumentError("pcc needs two equal-length vectors of size >= 2")
    if a.std() == 0 or b.std() == 0:
        raise UndefinedStatisticError("pcc undefined for zero-variance input")
    return float(stats.pearsonr(a, b).statistic)


def scc(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) != len(b) or len(a) < 2:
        raise ArgumentError("scc needs two equal-length vectors of size >= 2")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise UndefinedStatisticError("scc undefined for constant input")
    return float(stats.spearmanr(a, b).statistic)


def rmse(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) != len(b) or len(a) < 1:
        raise ArgumentError("rmse needs two equal-length nonempty vectors")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def f_test(residuals_a, residuals_b, alpha=0.05):
    """One-sided variance-ratio test: does metric a (proposed) have
    significantly smaller residuals than metric b (competitor)?

    Returns (significant, F) with F = var(b) / var(a).
    """
    ra = np.asarray(residuals_a, dtype=np.float64)
    rb = np.asarray(residuals_b, dtype=np.float64)
    if len(ra) < 2 or len(rb) < 2:
        raise ArgumentError("f_test needs residual vectors of length >= 2")
    var_a = ra.var(ddof=1)
    var_b = rb.var(ddof=1)
    if var_a == 0:
        raise UndefinedStatisticError("f_test undefined: zero variance in denominator")
    f_stat = float(var_b / var_a)
    critical = float(stats.f.ppf(1.0 - alpha, len(rb) - 1, len(ra) - 1))
    return f_stat > critical, f_stat


# -- evaluation protocol -----------------------------------------------------


def score_manifest(rows, model, jobs=1, log=None):
    """Score every manifest pair; missing files are skipped with a warning.

    Returns (scored rows, reports, missing paths); report order follows the
    manifest regardless of the number of jobs.
    """
    log = log or (lambda msg: print(msg, file=sys.stderr))
    missing = []
    usable = []
    for row in rows:
        absent = [p for p in (row.ref, row.deg) if not os.path.exists(p)]
        if absent:
            missing.extend(absent)
            log(f"warning: skipping pair with missing file(s): {absent}")
        else:
            usable.append(row)

    def score(row):
        return model.score_pair(load_image(row.ref), load_image(row.deg))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool_:
            reports = list(pool_.map(score, usable))
    else:
        reports = [score(row) for row in usable]
    return usable, reports, missing


def evaluate(rows, model, jobs=1, log=None):
    """Full protocol: scores, logistic mapping, PCC/SCC/RMSE, residuals."""
    usable, reports, missing = score_manifest(rows, model, jobs=jobs, log=log)
    if len(usable) < 6:
        raise ArgumentError(
            f"evaluation needs at least 6 scorable pairs, got {len(usable)}"
        )
    s = np.array([rep.s for rep in reports])
    dmos = np.array([row.dmos for row in usable])
    params = logistic_fit(s, dmos)
    mapped = logistic_apply(params, s)
    residuals = mapped - dmos
    report = {
        "n_pairs": len(usable),
        "missing_files": missing,
        "pcc": pcc(mapped, dmos) if mapped.std() > 0 else 0.0,
        "scc": scc(s, dmos),
        "rmse": rmse(mapped, dmos),
        "logistic_params": [float(v) for v in params],
        "config_fingerprint": reports[0].config_fingerprint,
    }
    pair_rows = [
        {
            "ref": row.ref,
            "deg": row.deg,
            "s": float(rep.s),
            "mapped": float(m),
            "dmos": float(row.dmos),
            "residual": float(r),
            "d_low_n": rep.d_low_n,
            "d_mid_n": rep.d_mid_n,
            "d_high_n": rep.d_high_n,
        }
        for row, rep, m, r in zip(usable, reports, mapped, residuals)
    ]
    return report, pair_rows


def simplex_grid(step):
    """All (w_l, w_m, w_h) with nonnegative entries summing to 1 on the grid."""
    n = int(round(1.0 / step))
    points = []
    for i in range(n + 1):
        for j in range(n + 1 - i):
            k = n - i - j
            points.append((i / n, j / n, k / n))
    return points


def weight_sweep(rows, model, step=0.05, jobs=1, log=None):
    """Re-pool cached normalized dissimilarities at every simplex grid point.

    Returns a list of dicts (w_low, w_mid, w_high, pcc, scc, rmse), one per
    grid point, consistent with running evaluate() at those weights.
    """
    usable, reports, _ = score_manifest(rows, model, jobs=jobs, log=log)
    if len(usable) < 6:
        raise ArgumentError("weight sweep needs at least 6 scorable pairs")
    d_norm = np.array([(r.d_low_n, r.d_mid_n, r.d_high_n) for r in reports])
    dmos = np.array([row.dmos for row in usable])
    out = []
    for w in simplex_grid(step):
        s = d_norm @ np.asarray(w)
        entry = {"w_low": w[0], "w_mid": w[1], "w_high": w[2]}
        try:
            params = logistic_fit(s, dmos)
            mapped = logistic_apply(params, s)
            entry["pcc"] = pcc(mapped, dmos) if mapped.std() > 0 else 0.0
            entry["scc"] = scc(s, dmos)
            entry["rmse"] = rmse(mapped, dmos)
        except UndefinedStatisticError:
            entry["pcc"] = entry["scc"] = 0.0
            entry["rmse"] = rmse(np.full_like(dmos, dmos.mean()), dmos)
        out.append(entry)
    return out

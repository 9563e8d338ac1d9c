"""JSON and CSV serialization of detection results."""

import csv
import json
import math


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def single_report(*, spec, n, d, cand, result, outcome, cfg, elapsed_ms=None, source=None):
    change_points = []
    if outcome.reject:
        change_points.append({"location": result.t_hat, "p_value": outcome.p_value, "depth": 0})
    return {
        "method": "single",
        "distance": spec.to_dict(),
        "n": n,
        "d": d,
        "delta": cand.delta,
        "t_min": cand.t_min,
        "t_max": cand.t_max,
        "t_hat": result.t_hat,
        "s_hat": result.s_hat,
        "p_value": outcome.p_value,
        "reject": bool(outcome.reject),
        "cutoff": _num(outcome.cutoff),
        "change_points": change_points,
        "seed": cfg.seed,
        "B": cfg.B,
        "alpha": cfg.alpha,
        "source": source,
        "elapsed_ms": elapsed_ms,
    }


def multi_report(*, spec, d, report, elapsed_ms=None, source=None):
    root = next((s for s in report.splits if s["depth"] == 0), None)
    cfg = report.config
    return {
        "method": "multi",
        "distance": spec.to_dict(),
        "n": report.n,
        "d": d,
        "delta": None,
        "t_hat": root["t"] if root else None,
        "s_hat": root["score"] if root else None,
        "p_value": root["p_value"] if root else None,
        "reject": bool(report.change_points),
        "change_points": [{"location": c.location, "p_value": c.p_value, "depth": c.depth}
                          for c in report.change_points],
        "segments": [list(s) for s in report.segments],
        "splits": report.splits,
        "min_seg": cfg["min_seg"],
        "max_depth": cfg["max_depth"],
        "seed": cfg["seed"],
        "B": cfg["B"],
        "alpha": cfg["alpha"],
        "source": source,
        "elapsed_ms": elapsed_ms,
    }


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_text(text, path, stdout):
    if path in (None, "-"):
        stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def curve_rows(result):
    return [(int(t), repr(float(v))) for t, v in zip(result.splits, result.curve)]

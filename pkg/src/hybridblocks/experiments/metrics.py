"""RMSE bookkeeping shared by the experiment runners."""

import math

import numpy as np


def rmse(pred, target) -> float:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    if pred.size == 0:
        return 0.0
    return math.sqrt(float(np.mean((pred - target) ** 2)))


def region_metrics(pred, target, region_mask) -> dict:
    """Overall / in-region / out-of-region RMSE for one model variant."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    region_mask = np.asarray(region_mask, dtype=bool)
    return {
        "rmse_overall": rmse(pred, target),
        "rmse_blackout": rmse(pred[region_mask], target[region_mask]),
        "rmse_nonblackout": rmse(pred[~region_mask], target[~region_mask]),
    }


def metrics_csv(per_variant: dict) -> str:
    """CSV table: one row per variant, columns for each metric key."""
    variants = list(per_variant)
    columns = list(per_variant[variants[0]])
    rows = ["variant," + ",".join(columns)]
    for v in variants:
        rows.append(v + "," + ",".join(format(per_variant[v][c], ".17g") for c in columns))
    return "\n".join(rows) + "\n"

"""Forecasting module: classifiers with calibration, demand forecasters, metrics."""

from .net import BatchNet, BatchNetConfig, train_batch
from .streaming import StreamingKnn
from .calibration import brier_score, calibrate, platt_fit, platt_apply
from .mi import rank_features_mi
from .metrics import (
    auc_pair,
    auc_trapezoid,
    binary_metrics,
    evaluate,
    stratified_folds,
)
from .demand import (
    DemandSeries,
    DemandClass,
    SpecParams,
    classify_demand,
    pool_by_magnitude,
    forecast_croston,
    forecast_sba,
    TwofoldForecaster,
    spec_metric,
)

__all__ = [
    "BatchNet",
    "BatchNetConfig",
    "train_batch",
    "StreamingKnn",
    "brier_score",
    "calibrate",
    "platt_fit",
    "platt_apply",
    "rank_features_mi",
    "auc_pair",
    "auc_trapezoid",
    "binary_metrics",
    "evaluate",
    "stratified_folds",
    "DemandSeries",
    "DemandClass",
    "SpecParams",
    "classify_demand",
    "pool_by_magnitude",
    "forecast_croston",
    "forecast_sba",
    "TwofoldForecaster",
    "spec_metric",
]

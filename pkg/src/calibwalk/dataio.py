"""Dataset ingestion and report serialization.

CSV in (named prediction/outcome columns, extra columns ignored), JSON out
(schema version 1, stable key order, floats at shortest round-trip
precision so identical reports serialize to identical bytes).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ._version import __version__
from .data import CalibrationDataset, CumulativeProcess, WalkLocation, build_dataset
from .stattests import (
    BBTestResult,
    BMTestResult,
    HLGroup,
    HLTestResult,
    SMALL_SAMPLE_VARIANCE,
    WeakCalibResult,
)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class DatasetSummary:
    n: int
    events: int
    mean_prediction: float
    total_variance: float
    tie_flag: bool
    small_sample_warning: bool


@dataclass(frozen=True)
class AnalysisReport:
    dataset: DatasetSummary
    bm: BMTestResult
    bb: BBTestResult
    hl: Optional[HLTestResult] = None
    weak_calibration: Optional[WeakCalibResult] = None
    monte_carlo: Optional[dict] = None
    tool_version: str = __version__
    timestamp: str = ""


def summarize_dataset(data: CalibrationDataset,
                      proc: CumulativeProcess) -> DatasetSummary:
    return DatasetSummary(
        n=data.n,
        events=data.event_count,
        mean_prediction=float(data.predictions.mean()),
        total_variance=proc.total_variance,
        tie_flag=data.tie_flag,
        small_sample_warning=proc.total_variance < SMALL_SAMPLE_VARIANCE,
    )


# ---------------------------------------------------------------------------
# CSV ingestion

def read_dataset_csv(source, prediction_column: str = "p",
                     outcome_column: str = "y",
                     clamp_epsilon=None) -> CalibrationDataset:
    """Read a two-column (or wider) CSV into a validated dataset.

    Accepts a path or an open text stream.  LF and CRLF line endings and a
    UTF-8 byte-order mark are all tolerated; extra columns are ignored.
    Parse errors name the offending data row (1-based, header excluded).
    """
    if hasattr(source, "read"):
        return _read_csv_stream(source, prediction_column, outcome_column,
                                clamp_epsilon)
    with open(source, newline="", encoding="utf-8-sig") as handle:
        return _read_csv_stream(handle, prediction_column, outcome_column,
                                clamp_epsilon)


def _read_csv_stream(stream, prediction_column, outcome_column, clamp_epsilon):
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise ValueError("empty file: no header row")
    for column in (prediction_column, outcome_column):
        if column not in reader.fieldnames:
            raise ValueError(
                f"missing column {column!r} (found {reader.fieldnames})"
            )
    predictions, outcomes = [], []
    for row_number, row in enumerate(reader, start=1):
        predictions.append(
            _parse_number(row[prediction_column], prediction_column, row_number)
        )
        outcomes.append(
            _parse_number(row[outcome_column], outcome_column, row_number)
        )
    if not predictions:
        raise ValueError("no data rows")
    return build_dataset(predictions, outcomes, clamp_epsilon)


def _parse_number(cell, column, row_number):
    try:
        return float(cell)
    except (TypeError, ValueError):
        raise ValueError(
            f"non-numeric value {cell!r} in column {column!r} at row {row_number}"
        ) from None


# ---------------------------------------------------------------------------
# report serialization

def _location_to_dict(location: WalkLocation) -> dict:
    return {
        "index": location.index,
        "time": location.time,
        "prediction": location.prediction,
    }


def _location_from_dict(d) -> WalkLocation:
    return WalkLocation(d["index"], d["time"], d["prediction"])


def report_to_dict(report: AnalysisReport) -> dict:
    d = {
        "schema": SCHEMA_VERSION,
        "tool": {"name": "calibwalk", "version": report.tool_version},
        "timestamp": report.timestamp,
        "dataset": {
            "n": report.dataset.n,
            "events": report.dataset.events,
            "mean_prediction": report.dataset.mean_prediction,
            "total_variance": report.dataset.total_variance,
            "tie_flag": report.dataset.tie_flag,
            "small_sample_warning": report.dataset.small_sample_warning,
        },
        "bm_test": {
            "c_star": report.bm.c_star,
            "s_star": report.bm.s_star,
            "location": _location_to_dict(report.bm.location),
            "p_value": report.bm.p_value,
        },
        "bb_test": {
            "c_n": report.bb.c_n,
            "s_n": report.bb.s_n,
            "p_a": report.bb.p_a,
            "b_star": report.bb.b_star,
            "p_b": report.bb.p_b,
            "location_bridge": _location_to_dict(report.bb.location_bridge),
            "p_unified": report.bb.p_unified,
        },
    }
    if report.hl is not None:
        d["hosmer_lemeshow"] = {
            "statistic": report.hl.statistic,
            "groups": report.hl.groups,
            "df": report.hl.df,
            "p_value": report.hl.p_value,
            "group_table": [
                {
                    "size": g.size,
                    "observed": g.observed,
                    "expected": g.expected,
                    "mean_prediction": g.mean_prediction,
                }
                for g in report.hl.group_table
            ],
        }
    if report.weak_calibration is not None:
        w = report.weak_calibration
        section = {
            "intercept": w.intercept,
            "slope": w.slope,
            "lr_statistic": w.lr_statistic,
            "converged": w.converged,
            "iterations": w.iterations,
        }
        if w.p_value is not None:
            section["p_value"] = w.p_value
        d["weak_calibration"] = section
    if report.monte_carlo is not None:
        d["monte_carlo"] = dict(report.monte_carlo)
    return d


def report_from_dict(d) -> AnalysisReport:
    if d.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema {d.get('schema')!r}")
    ds = d["dataset"]
    bm = d["bm_test"]
    bb = d["bb_test"]
    hl = None
    if "hosmer_lemeshow" in d:
        h = d["hosmer_lemeshow"]
        hl = HLTestResult(
            statistic=h["statistic"],
            groups=h["groups"],
            df=h["df"],
            p_value=h["p_value"],
            group_table=tuple(
                HLGroup(g["size"], g["observed"], g["expected"],
                        g["mean_prediction"])
                for g in h["group_table"]
            ),
        )
    weak = None
    if "weak_calibration" in d:
        w = d["weak_calibration"]
        weak = WeakCalibResult(
            intercept=w["intercept"],
            slope=w["slope"],
            lr_statistic=w["lr_statistic"],
            p_value=w.get("p_value"),
            converged=w["converged"],
            iterations=w["iterations"],
        )
    return AnalysisReport(
        dataset=DatasetSummary(
            n=ds["n"],
            events=ds["events"],
            mean_prediction=ds["mean_prediction"],
            total_variance=ds["total_variance"],
            tie_flag=ds["tie_flag"],
            small_sample_warning=ds["small_sample_warning"],
        ),
        bm=BMTestResult(
            c_star=bm["c_star"],
            s_star=bm["s_star"],
            location=_location_from_dict(bm["location"]),
            p_value=bm["p_value"],
        ),
        bb=BBTestResult(
            c_n=bb["c_n"],
            s_n=bb["s_n"],
            p_a=bb["p_a"],
            b_star=bb["b_star"],
            p_b=bb["p_b"],
            location_bridge=_location_from_dict(bb["location_bridge"]),
            p_unified=bb["p_unified"],
        ),
        hl=hl,
        weak_calibration=weak,
        monte_carlo=d.get("monte_carlo"),
        tool_version=d["tool"]["version"],
        timestamp=d["timestamp"],
    )


def _dump_json(payload, destination):
    text = json.dumps(payload, indent=2) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
        return
    Path(destination).write_text(text, encoding="utf-8", newline="\n")


def write_report_json(report: AnalysisReport, destination) -> None:
    """Serialize a report; identical reports produce byte-identical files."""
    _dump_json(report_to_dict(report), destination)


def read_report_json(source) -> AnalysisReport:
    if hasattr(source, "read"):
        return report_from_dict(json.load(source))
    with open(source, encoding="utf-8") as handle:
        return report_from_dict(json.load(handle))


# ---------------------------------------------------------------------------
# study serialization

def _scenario_to_dict(scenario) -> dict:
    return {
        "family": scenario.family,
        "n": scenario.n,
        "replications": scenario.replications,
        "seed": scenario.seed,
        "beta0": scenario.beta0,
        "a": scenario.a,
        "b": scenario.b,
        "alpha": scenario.alpha,
    }


def study_to_dict(summaries) -> dict:
    cells = []
    for summary in summaries:
        cell = {
            "scenario": _scenario_to_dict(summary.scenario),
            "rejections": {k: summary.rejections[k]
                           for k in sorted(summary.rejections)},
            "standard_errors": {k: summary.standard_errors[k]
                                for k in sorted(summary.standard_errors)},
            "lr_failures": summary.lr_failures,
            "wall_time": summary.wall_time,
        }
        if summary.pvalues is not None:
            cell["pvalues"] = {
                k: np.asarray(summary.pvalues[k]).tolist()
                for k in sorted(summary.pvalues)
            }
        cells.append(cell)
    return {
        "schema": SCHEMA_VERSION,
        "tool": {"name": "calibwalk", "version": __version__},
        "cells": cells,
    }


def write_study_json(summaries, destination) -> None:
    """Serialize study cells with their full scenario echoes and seeds."""
    _dump_json(study_to_dict(summaries), destination)


def read_study_json(source) -> dict:
    if hasattr(source, "read"):
        return json.load(source)
    with open(source, encoding="utf-8") as handle:
        return json.load(handle)


# ---------------------------------------------------------------------------
# config

def read_config(source) -> dict:
    """Parse ``key = value`` lines; ``#`` comments and blank lines ignored."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8-sig")
    options = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line {line_number}: {raw!r}")
        key, _, value = line.partition("=")
        options[key.strip()] = value.strip()
    return options

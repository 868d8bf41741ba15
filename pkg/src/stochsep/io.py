"""File formats shared by all tools: delimited and binary matrices, model
JSON, experiment report JSON.

Reals are rendered with Python's shortest round-trip repr, so CSV and JSON
round-trips are value-exact; the binary matrix format is raw little-endian
IEEE-754 and round-trips bit for bit.  Parsers never coerce silently:
malformed rows fail with their line number, non-finite values are
rejected everywhere.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any

import numpy as np

from .corrector import (
    KINDS,
    CorrectorModel,
    LabeledDataset,
    WhiteningModel,
)
from .sampling import DistributionSpec
from .separability import (
    CascadePredicate,
    CellResult,
    ConjunctionClause,
    ExperimentConfig,
    ExperimentReport,
    LinearPredicate,
)

__all__ = [
    "FormatError",
    "read_matrix",
    "write_matrix",
    "read_labeled",
    "write_labeled",
    "model_to_dict",
    "model_from_dict",
    "read_model",
    "write_model",
    "report_to_dict",
    "report_from_dict",
    "read_report",
    "write_report",
]

_BIN_MAGIC = b"SEPM"
_BIN_VERSION = 1
_BIN_HEADER = struct.Struct("<4sIQQ")

FORMATS = ("csv", "bin")


class FormatError(ValueError):
    """Malformed or inconsistent file content."""


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in FORMATS:
            raise FormatError(f"unknown matrix format {fmt!r}; expected one of {FORMATS}")
        return fmt
    return "bin" if path.suffix == ".bin" else "csv"


def _parse_real(token: str, path: Path, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise FormatError(f"{path}:{lineno}: non-numeric token {token!r}") from None
    if not np.isfinite(value):
        raise FormatError(f"{path}:{lineno}: non-finite value {token!r} rejected")
    return value


def _read_csv_rows(path: Path) -> tuple[list[list[float]], list[int]]:
    rows: list[list[float]] = []
    linenos: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            rows.append([_parse_real(t, path, lineno) for t in stripped.split(",")])
            linenos.append(lineno)
    return rows, linenos


def read_matrix(path, fmt: str | None = None) -> np.ndarray:
    """Load a feature matrix from CSV or the binary format."""
    path = Path(path)
    if _infer_format(path, fmt) == "bin":
        return _read_matrix_bin(path)
    rows, linenos = _read_csv_rows(path)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    width = len(rows[0])
    for row, lineno in zip(rows, linenos):
        if len(row) != width:
            raise FormatError(
                f"{path}:{lineno}: expected {width} columns, got {len(row)}"
            )
    return np.array(rows, dtype=np.float64)


def write_matrix(matrix, path, fmt: str | None = None, header: str | None = None) -> None:
    """Write a feature matrix as CSV (default) or the binary format."""
    x = np.ascontiguousarray(matrix, dtype=np.float64)
    if x.ndim != 2:
        raise FormatError(f"expected a 2-d matrix, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise FormatError("matrix contains non-finite entries")
    path = Path(path)
    if _infer_format(path, fmt) == "bin":
        _write_matrix_bin(x, path)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header is not None:
            fh.write(f"# {header}\n")
        for row in x:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def _read_matrix_bin(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < _BIN_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, rows, cols = _BIN_HEADER.unpack_from(raw)
    if magic != _BIN_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != _BIN_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    expected = _BIN_HEADER.size + rows * cols * 8
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_BIN_HEADER.size)
    return data.reshape(rows, cols).copy()


def _write_matrix_bin(x: np.ndarray, path: Path) -> None:
    header = _BIN_HEADER.pack(_BIN_MAGIC, _BIN_VERSION, x.shape[0], x.shape[1])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(x, dtype="<f8").tobytes())


def read_labeled(path) -> LabeledDataset:
    """Load a labeled dataset: CSV whose last column is positive|trash."""
    path = Path(path)
    features: list[list[float]] = []
    labels: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = stripped.split(",")
            if len(tokens) < 2:
                raise FormatError(f"{path}:{lineno}: need at least one feature and a label")
            label = tokens[-1].strip()
            if label not in ("positive", "trash"):
                raise FormatError(
                    f"{path}:{lineno}: unknown label {label!r}; expected positive|trash"
                )
            features.append([_parse_real(t, path, lineno) for t in tokens[:-1]])
            labels.append(label)
    if not features:
        raise FormatError(f"{path}: no data rows")
    width = len(features[0])
    if any(len(row) != width for row in features):
        raise FormatError(f"{path}: inconsistent column counts")
    return LabeledDataset(np.array(features, dtype=np.float64), tuple(labels))


def write_labeled(dataset: LabeledDataset, path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row, label in zip(dataset.features, dataset.labels):
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write(f",{label}\n")


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise FormatError(message)


def _floats(values, context: str) -> list[float]:
    _require(isinstance(values, list), f"{context} must be a list")
    out = []
    for v in values:
        _require(isinstance(v, (int, float)) and not isinstance(v, bool), f"{context} must hold numbers")
        f = float(v)
        _require(np.isfinite(f), f"{context} holds a non-finite value")
        out.append(f)
    return out


def model_to_dict(model: CorrectorModel) -> dict[str, Any]:
    return {
        "kind": model.kind,
        "whitening": {
            "mean": model.whitening.mean.tolist(),
            "basis": model.whitening.basis.tolist(),
            "scale": model.whitening.scale.tolist(),
        },
        "cascade": {
            "clauses": [
                {
                    "predicates": [
                        {
                            "w": p.weights.tolist(),
                            "theta": p.threshold,
                            "closed": p.closed,
                        }
                        for p in clause.predicates
                    ]
                }
                for clause in model.cascade.clauses
            ]
        },
        "metadata": dict(model.metadata),
    }


def model_from_dict(doc: dict[str, Any]) -> CorrectorModel:
    _require(isinstance(doc, dict), "model document must be an object")
    kind = doc.get("kind")
    _require(kind in KINDS, f"unknown model kind {kind!r}; expected one of {KINDS}")
    wd = doc.get("whitening")
    _require(isinstance(wd, dict), "model requires a whitening object")
    basis = wd.get("basis")
    _require(isinstance(basis, list) and basis, "whitening basis must be a non-empty list")
    whitening = WhiteningModel(
        np.array(_floats(wd.get("mean"), "whitening mean")),
        np.array([_floats(row, "whitening basis row") for row in basis]),
        np.array(_floats(wd.get("scale"), "whitening scale")),
    )
    cd = doc.get("cascade")
    _require(isinstance(cd, dict) and isinstance(cd.get("clauses"), list), "model requires a cascade with clauses")
    clauses = []
    for clause_doc in cd["clauses"]:
        _require(
            isinstance(clause_doc, dict) and isinstance(clause_doc.get("predicates"), list),
            "each clause must carry a predicate list",
        )
        preds = []
        for pd in clause_doc["predicates"]:
            _require(isinstance(pd, dict), "each predicate must be an object")
            _require(isinstance(pd.get("closed"), bool), "predicate 'closed' must be boolean")
            theta = pd.get("theta")
            _require(
                isinstance(theta, (int, float)) and not isinstance(theta, bool),
                "predicate 'theta' must be a number",
            )
            preds.append(
                LinearPredicate(np.array(_floats(pd.get("w"), "predicate weights")), float(theta), pd["closed"])
            )
        clauses.append(ConjunctionClause(tuple(preds)))
    metadata = doc.get("metadata", {})
    _require(isinstance(metadata, dict), "model metadata must be an object")
    return CorrectorModel(whitening, CascadePredicate(tuple(clauses)), kind, metadata)


def read_model(path) -> CorrectorModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def write_model(model: CorrectorModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def _distribution_to_json(entry: str | DistributionSpec):
    if isinstance(entry, str):
        return entry
    doc = {"kind": entry.kind, "n": entry.n}
    if entry.semi_axes is not None:
        doc["semi_axes"] = list(entry.semi_axes)
    return doc


def _distribution_from_json(doc) -> str | DistributionSpec:
    if isinstance(doc, str):
        return doc
    _require(isinstance(doc, dict), "distribution entry must be a string or object")
    semi = doc.get("semi_axes")
    return DistributionSpec(
        kind=doc.get("kind"),
        n=int(doc.get("n")),
        semi_axes=tuple(_floats(semi, "semi_axes")) if semi is not None else None,
    )


def config_to_dict(config: ExperimentConfig) -> dict[str, Any]:
    return {
        "distributions": [_distribution_to_json(d) for d in config.distributions],
        "n_list": list(config.n_list),
        "m": config.m,
        "repeats": config.repeats,
        "seed": config.seed,
    }


def config_from_dict(doc: dict[str, Any]) -> ExperimentConfig:
    _require(isinstance(doc, dict), "experiment config must be an object")
    for key in ("distributions", "n_list", "m", "repeats", "seed"):
        _require(key in doc, f"experiment config missing {key!r}")
    return ExperimentConfig(
        distributions=tuple(_distribution_from_json(d) for d in doc["distributions"]),
        n_list=tuple(int(n) for n in doc["n_list"]),
        m=int(doc["m"]),
        repeats=int(doc["repeats"]),
        seed=int(doc["seed"]),
    )


def report_to_dict(report: ExperimentReport, version: str | None = None) -> dict[str, Any]:
    if version is None:
        from . import __version__ as version
    cells = []
    for cell in report.cells:
        doc = {
            "distribution": cell.distribution.kind,
            "n": cell.distribution.n,
            "f1_min": cell.f1_min,
            "f1_median": cell.f1_median,
            "f1_max": cell.f1_max,
            "f1_values": list(cell.f1_values),
        }
        if cell.distribution.semi_axes is not None:
            doc["semi_axes"] = list(cell.distribution.semi_axes)
        if cell.theory is not None:
            doc["theory_ball"] = cell.theory
        cells.append(doc)
    return {"config": config_to_dict(report.config), "cells": cells, "version": version}


def report_from_dict(doc: dict[str, Any]) -> ExperimentReport:
    _require(isinstance(doc, dict), "report must be an object")
    config = config_from_dict(doc.get("config"))
    raw_cells = doc.get("cells")
    _require(isinstance(raw_cells, list), "report requires a cell list")
    cells = []
    for cd in raw_cells:
        _require(isinstance(cd, dict), "each cell must be an object")
        semi = cd.get("semi_axes")
        spec = DistributionSpec(
            kind=cd.get("distribution"),
            n=int(cd.get("n")),
            semi_axes=tuple(_floats(semi, "semi_axes")) if semi is not None else None,
        )
        values = tuple(_floats(cd.get("f1_values"), "f1_values"))
        _require(
            len(values) == config.repeats,
            f"cell for {spec.kind} n={spec.n} echoes {len(values)} values, "
            f"config says repeats={config.repeats}",
        )
        cells.append(CellResult(spec, values, cd.get("theory_ball")))
    return ExperimentReport(config, tuple(cells))


def read_report(path) -> ExperimentReport:
    with open(path, "r", encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


def write_report(report: ExperimentReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report_to_dict(report), fh, indent=2)
        fh.write("\n")

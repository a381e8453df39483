"""Result serialization, config files, and run manifests.

CSV column order is part of the on-disk contract. Floats are printed with 9
significant digits so a re-run with an identical config produces a
byte-identical file.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .harness import OccupancyReport, PdPfaCurve, RecoveryReport
from .matrices import SensingMatrix, build_matrix

__all__ = [
    "CONFIG_SCHEMA_VERSION",
    "TOOL_VERSION",
    "DETECTION_COLUMNS",
    "RECOVERY_COLUMNS",
    "SCAN_COLUMNS",
    "RunManifest",
    "config_hash",
    "load_config",
    "save_config",
    "serialize_report",
    "read_report",
    "matrix_descriptor",
    "matrix_from_descriptor",
    "write_manifest",
    "read_manifest",
]

CONFIG_SCHEMA_VERSION = 1
TOOL_VERSION = "0.1.0"

DETECTION_COLUMNS = ("technique", "snr_db", "threshold_factor", "n", "trials",
                     "nd", "nf", "pd", "pfa")
RECOVERY_COLUMNS = ("solver", "scheme", "n", "k", "m", "snr_db", "trials",
                    "mean_re", "mean_mse", "mean_cc", "mean_rsnr", "mean_hd",
                    "mean_tr_ms", "mean_tp_ms")
SCAN_COLUMNS = ("slot", "channel", "technique", "decision", "truth", "est_snr_db")

_COLUMNS = {
    "detection": DETECTION_COLUMNS,
    "recovery": RECOVERY_COLUMNS,
    "scan": SCAN_COLUMNS,
}


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.9g" % float(value)
    return str(value)


def _report_kind(report) -> str:
    if isinstance(report, PdPfaCurve):
        return "detection"
    if isinstance(report, RecoveryReport):
        return "recovery"
    if isinstance(report, OccupancyReport):
        return "scan"
    raise TypeError(f"unsupported report type {type(report).__name__}")


def serialize_report(report, path: str | Path, fmt: str = "csv") -> Path:
    """Write a report's records to CSV or JSON; returns the path written."""
    kind = _report_kind(report)
    cols = _COLUMNS[kind]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        # newline='' so csv controls line endings on every platform
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(cols)
            for rec in report.records:
                writer.writerow([_fmt(rec[c]) for c in cols])
    elif fmt == "json":
        rows = [{c: _json_value(rec[c]) for c in cols} for rec in report.records]
        with open(path, "w") as fh:
            json.dump({"kind": kind, "records": rows}, fh, indent=2)
            fh.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float("%.9g" % float(value))
    return value


_INT_COLUMNS = {"n", "k", "m", "trials", "nd", "nf", "slot", "channel", "truth"}
_STR_COLUMNS = {"technique", "solver", "scheme", "decision"}


def read_report(path: str | Path) -> list[dict]:
    """Load a serialized report back into a list of typed record dicts."""
    path = Path(path)
    if path.suffix == ".json":
        with open(path) as fh:
            payload = json.load(fh)
        return payload["records"]
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        out = []
        for row in reader:
            rec = {}
            for key, raw in row.items():
                if key in _STR_COLUMNS:
                    rec[key] = raw
                elif key in _INT_COLUMNS:
                    rec[key] = int(raw)
                else:
                    rec[key] = float(raw)
            out.append(rec)
        return out


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    """sha256 of the canonical JSON form; insensitive to key order."""
    return hashlib.sha256(_canonical_json(config).encode()).hexdigest()


def save_config(config: dict, path: str | Path) -> Path:
    path = Path(path)
    body = dict(config)
    body.setdefault("schema", CONFIG_SCHEMA_VERSION)
    with open(path, "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_config(path: str | Path) -> dict:
    with open(path) as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ValueError("config must be a JSON object")
    schema = config.get("schema")
    if schema != CONFIG_SCHEMA_VERSION:
        raise ValueError(
            f"unsupported config schema {schema!r}; expected {CONFIG_SCHEMA_VERSION}")
    return config


def matrix_descriptor(matrix: SensingMatrix) -> dict:
    """Compact rebuildable description; never the dense entries.

    Dense schemes rebuild from the seed alone. Structured schemes carry their
    generator vector and row layout in options so masked or explicit
    generators round-trip exactly.
    """
    options: dict = {}
    if matrix.scheme in ("circulant", "toeplitz"):
        options["scale"] = matrix.scale
        options["generator"] = [float(v) for v in matrix.generator]
        if not np.array_equal(matrix.rows, np.arange(matrix.m)):
            options["random_rows"] = True
    return {
        "scheme": matrix.scheme,
        "m": matrix.m,
        "n": matrix.n,
        "seed": matrix.seed,
        "options": options,
    }


def matrix_from_descriptor(desc: dict) -> SensingMatrix:
    return build_matrix(desc["scheme"], desc["m"], desc["n"], desc["seed"],
                        options=desc.get("options"))


@dataclasses.dataclass(frozen=True)
class RunManifest:
    config_hash: str
    tool_version: str
    started_at: str
    finished_at: str
    base_seed: int
    output_paths: tuple


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def write_manifest(manifest: RunManifest, directory: str | Path,
                   stem: str = "run") -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{stem}_manifest.json"
    body = dataclasses.asdict(manifest)
    body["output_paths"] = list(body["output_paths"])
    with open(path, "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_manifest(path: str | Path) -> RunManifest:
    with open(path) as fh:
        body = json.load(fh)
    return RunManifest(
        config_hash=body["config_hash"],
        tool_version=body["tool_version"],
        started_at=body["started_at"],
        finished_at=body["finished_at"],
        base_seed=int(body["base_seed"]),
        output_paths=tuple(body["output_paths"]),
    )

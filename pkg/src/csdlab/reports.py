"""Deterministic report serialization: canonical JSON and RFC-4180 CSV.

Every command of the batch front-end writes its results through this module
so that identical (config, seed) pairs produce byte-identical artifacts.

JSON report schema (``schema_version`` 1):

    schema_version  int, bumped on any incompatible layout change
    kind            str, the command that produced the report
    seed            int or null, the effective random seed
    config          object, the fully resolved configuration
    config_hash     str, sha1 over the canonical encoding of ``config``
    constants       object, frozen calibration constants consumed by the run
    results         object, command-specific payload
    wall_clock      always null; measured timing goes to stderr (--timing)
                    so that artifacts depend only on (config, seed)

CSV tables carry a header row, CRLF line endings, UTF-8 text, and use "."
as the decimal separator.  Floats are written with ``repr`` so that values
survive a round trip through the file unchanged.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import zipfile

import numpy as np

SCHEMA_VERSION = 1


def plain(obj):
    """Recursively convert containers and numpy scalars to JSON-ready types."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    # bool before int: bool is an int subclass
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__} into a report")


def canonical_json(obj) -> str:
    """Stable, human-readable encoding: sorted keys, two-space indent."""
    return json.dumps(plain(obj), sort_keys=True, indent=2) + "\n"


def content_hash(obj) -> str:
    data = json.dumps(plain(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha1(data.encode("utf-8")).hexdigest()


def build_report(kind: str, config: dict, seed, results: dict,
                 constants: dict | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "seed": None if seed is None else int(seed),
        "config": plain(config),
        "config_hash": content_hash(config),
        "constants": plain(constants or {}),
        "results": plain(results),
        "wall_clock": None,
    }


def write_json(path, report: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(canonical_json(report))


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows) -> None:
    """RFC-4180 table: header row, CRLF terminators, UTF-8."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def write_npz(path, arrays: dict) -> None:
    """np.load-compatible archive with fixed timestamps and sorted entries.

    np.savez stamps zip members with the current time, which breaks
    byte-identical reruns; this writer pins the metadata instead.
    """
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asarray(arrays[name]),
                                      allow_pickle=False)
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())

"""Artifact writers: CSV tables, JSON reports and the run manifest."""

import json
import platform
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np
import scipy

from . import __version__
from .numkit import rad_ns_to_ghz
from .readout import ReadoutTrace

TRACE_COLUMNS = ["resonator_id", "omega_m_GHz", "t_evolve_ns", "t_ns", "re_signal", "im_signal"]


def _format(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.12g" % float(value)
    return str(value)


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], output_path: Path) -> None:
    """
    Write a table with a header row, '.' decimals and %.12g number formatting.

    Args:
        header: Column names
        rows: Row values in header order
        output_path: Path to output CSV file
    """
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} values, header has {len(header)}")
        lines.append(",".join(_format(v) for v in row))
    with open(output_path, 'w', encoding='utf-8', newline='') as f:
        f.write("\n".join(lines) + "\n")


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(payload: Dict[str, Any], output_path: Path, config_hash: str) -> None:
    """
    Write a JSON artifact stamped with the hash of the producing config.

    Args:
        payload: Report contents
        output_path: Path to output JSON file
        config_hash: SHA-256 of the canonical config
    """
    document = dict(_jsonable(payload))
    document["config_hash"] = config_hash
    with open(output_path, 'w', encoding='utf-8') as f:
        json.dump(document, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")


def write_traces_csv(traces: Sequence[ReadoutTrace], output_path: Path) -> None:
    """Write traces in the layout parser.parse_trace_file reads back."""
    rows = []
    for tr in traces:
        omega_ghz = rad_ns_to_ghz(tr.omega_m)
        for t, s in zip(tr.times, tr.signal):
            rows.append((tr.resonator_id, omega_ghz, tr.t_evolve, t, s.real, s.imag))
    write_csv(TRACE_COLUMNS, rows, output_path)


def software_versions() -> Dict[str, str]:
    return {
        "qlinksim": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def write_manifest(output_dir: Path, command: str, config: Dict[str, Any], config_hash: str,
                   seed: int, artifacts: List[str]) -> Path:
    """
    Write manifest.json describing one run.

    Args:
        output_dir: Run output directory
        command: Subcommand that produced the artifacts
        config: Effective configuration
        config_hash: SHA-256 of the canonical config
        seed: Seed used for stochastic steps
        artifacts: Artifact file names relative to output_dir

    Returns:
        Path to the manifest
    """
    manifest = {
        "command": command,
        "config_hash": config_hash,
        "config": config,
        "seed": seed,
        "versions": software_versions(),
        "artifacts": [{"file": name, "config_hash": config_hash} for name in sorted(artifacts)],
    }
    manifest_path = Path(output_dir) / "manifest.json"
    with open(manifest_path, 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")
    return manifest_path

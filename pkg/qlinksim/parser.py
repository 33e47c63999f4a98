"""CSV reader for readout traces."""

import csv
from collections import defaultdict
from typing import Dict, List, Tuple

import numpy as np

from .numkit import ghz_to_rad_ns
from .readout import ReadoutTrace

REQUIRED_COLUMNS = ("t_ns", "re_signal", "im_signal", "omega_m_GHz", "resonator_id")


def parse_trace_file(file_path: str) -> List[ReadoutTrace]:
    """
    Parse one trace CSV file.

    Expected CSV columns:
    - t_ns: Time from the start of the readout pulse (ns)
    - re_signal, im_signal: Transmitted signal quadratures
    - omega_m_GHz: Readout frequency (GHz)
    - resonator_id: Resonator number
    - t_evolve_ns: Three-body evolution time before readout (optional, default 0)

    Rows sharing (resonator_id, omega_m_GHz, t_evolve_ns) form one trace, sorted by time.

    Args:
        file_path: Path to the CSV file

    Returns:
        List of ReadoutTrace ordered by resonator, frequency and t_evolve

    Raises:
        ValueError: If a required column is missing
    """
    groups: Dict[Tuple[int, float, float], List[Tuple[float, complex]]] = defaultdict(list)

    with open(file_path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.DictReader(f)
        missing = [c for c in REQUIRED_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{file_path}: missing columns {', '.join(missing)}")

        for row_num, row in enumerate(reader, start=1):
            try:
                key = (
                    int(row['resonator_id']),
                    float(row['omega_m_GHz']),
                    _parse_float(row.get('t_evolve_ns'), default=0.0),
                )
                value = complex(float(row['re_signal']), float(row['im_signal']))
                groups[key].append((float(row['t_ns']), value))
            except (TypeError, ValueError) as e:
                print(f"Warning: Failed to parse row {row_num} of {file_path}: {e}")
                continue

    traces = []
    for (resonator_id, omega_m_ghz, t_evolve), samples in sorted(groups.items()):
        samples.sort(key=lambda s: s[0])
        traces.append(ReadoutTrace(
            resonator_id=resonator_id,
            omega_m=ghz_to_rad_ns(omega_m_ghz),
            t_evolve=t_evolve,
            times=np.array([s[0] for s in samples]),
            signal=np.array([s[1] for s in samples], dtype=complex),
        ))
    return traces


def parse_multiple_trace_files(file_paths: List[str]) -> List[ReadoutTrace]:
    """Parse several trace files and concatenate the traces in file order."""
    traces = []
    for file_path in file_paths:
        traces.extend(parse_trace_file(file_path))
    return traces


def _parse_float(value, default: float) -> float:
    if value is None or not str(value).strip():
        return default
    return float(value)

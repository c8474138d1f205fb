"""Deterministic CSV report files.

Every report is self-describing: metadata comment lines prefixed with '#'
(tool, command, config hash, seed) followed by a regular CSV header and
rows.  Numbers are formatted with %.12g so identical computations always
produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import pandas as pd

FLOAT_FORMAT = "%.12g"


def metadata_lines(command: str, config_hash: str, seed: int) -> list[str]:
    return [
        f"# factorlens {command} report",
        f"# config_sha256: {config_hash}",
        f"# seed: {seed}",
    ]


def write_report(
    frame: pd.DataFrame,
    path: str | Path,
    command: str,
    config_hash: str,
    seed: int,
    index: bool = False,
    notes: tuple[str, ...] = (),
) -> Path:
    """Write one report CSV with its metadata comment header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for line in metadata_lines(command, config_hash, seed):
            fh.write(line + "\n")
        for note in notes:
            fh.write(f"# {note}\n")
        frame.to_csv(fh, index=index, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_report(path: str | Path) -> pd.DataFrame:
    """Read a report CSV, skipping the '#' metadata lines."""
    return pd.read_csv(path, comment="#")


def weights_long_frame(weights_list) -> pd.DataFrame:
    """Member rows of factor weights in the export schema.

    Columns: date, indicator_id, band, asset_id, weight, membership,
    supersector.  Only invested (non-zero) rows are written.
    """
    import numpy as np

    frames = []
    for w in weights_list:
        t_idx, a_idx = np.nonzero(w.weights)
        frames.append(
            pd.DataFrame(
                {
                    "date": w.dates[t_idx].strftime("%Y-%m-%d"),
                    "indicator_id": w.indicator_id,
                    "band": w.band.kind,
                    "asset_id": [w.assets[j] for j in a_idx],
                    "weight": w.weights[t_idx, a_idx],
                    "membership": w.membership[t_idx, a_idx],
                    "supersector": w.sector_codes[a_idx] + 1,
                }
            )
        )
    if not frames:
        return pd.DataFrame(
            columns=[
                "date",
                "indicator_id",
                "band",
                "asset_id",
                "weight",
                "membership",
                "supersector",
            ]
        )
    return pd.concat(frames, ignore_index=True)

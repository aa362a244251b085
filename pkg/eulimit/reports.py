"""
Report emission: CSV tables through pandas and JSON summaries through pydantic.

Every file is written to a temporary sibling first and moved into place
with ``os.replace`` so readers never observe a partial file.
"""

import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


class FitSummary(BaseModel):
    model_config = ConfigDict(extra="forbid")

    metric: str
    slope: Optional[float] = None
    intercept: Optional[float] = None
    r2: Optional[float] = None
    flat_zero: bool = False


class SweepSummary(BaseModel):
    """Companion JSON of a sweep report."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    experiment_id: str
    config_echo: Dict[str, Any] = Field(default_factory=dict, alias="config")
    fits: List[FitSummary] = Field(default_factory=list)
    checks: Dict[str, bool] = Field(default_factory=dict)
    extras: Dict[str, Any] = Field(default_factory=dict)
    note: str = "numeric envelopes are desk-scale surrogates for existence-only constants"
    passed: bool = Field(default=False, alias="pass")


def _atomic_write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise
    logger.info("wrote %s", path)
    return path


def frame_to_csv(frame: pd.DataFrame, trailer: Sequence[str] = ()) -> str:
    """CSV text with 17 significant digits, NaN as empty fields and optional trailing lines."""
    text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    for line in trailer:
        text += f"{line}\n"
    return text


def write_csv_atomic(frame: pd.DataFrame, path: Union[str, Path], trailer: Sequence[str] = ()) -> Path:
    return _atomic_write(Path(path), frame_to_csv(frame, trailer))


def write_summary_atomic(summary: SweepSummary, path: Union[str, Path]) -> Path:
    return _atomic_write(Path(path), summary.model_dump_json(by_alias=True, indent=2) + "\n")

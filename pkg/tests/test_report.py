from __future__ import annotations

import math

from disclosure_scoring.analytics import CorrelationMatrix
from disclosure_scoring.report import UNDEFINED, corr_rows, fmt, write_rows


def test_fmt():
    assert fmt(None) == UNDEFINED == fmt(math.nan)
    assert fmt(3) == "3" and fmt(True) == "1"
    assert fmt(0.1 + 0.2) == "0.3"


def test_undefined_cells_written(tmp_path):
    m = CorrelationMatrix(("a", "b"), ((1.0, None), (None, None)))
    p = write_rows(tmp_path / "c.csv", ["metric", "row", "col", "value"], corr_rows("score", m))
    assert p.read_text().splitlines() == [
        "metric,row,col,value",
        "score,a,a,1.0",
        "score,a,b,undefined",
        "score,b,a,undefined",
        "score,b,b,undefined",
    ]

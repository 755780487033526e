#!/usr/bin/env python3
"""Run the full pipeline twice on the bundled synthetic corpus with the mock backend
and report timing, cache behaviour and whether the two output trees match.

    python3 scripts/run_synthetic_pipeline.py --out /tmp/synthetic --svg
"""

from __future__ import annotations

import argparse
import filecmp
import shutil
import tempfile
import time
from pathlib import Path

from disclosure_scoring.cli import main as cli_main
from disclosure_scoring.pipeline import EXCLUDED_FROM_TREE, output_files


def tree_equal(a: Path, b: Path) -> bool:
    fa, fb = output_files(a), output_files(b)
    return fa == fb and all(filecmp.cmp(a / f, b / f, shallow=False) for f in fa)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=None)
    ap.add_argument("--backend", default="mock:7")
    ap.add_argument("--svg", action="store_true")
    args = ap.parse_args()
    out = args.out or Path(tempfile.mkdtemp(prefix="disclosure-"))
    if out.exists():
        shutil.rmtree(out)
    extra = ["--svg"] if args.svg else []
    t0 = time.perf_counter()
    rc1 = cli_main(["run", "--out", str(out), "--backend", args.backend, *extra])
    t1 = time.perf_counter()
    snapshot = out.with_name(out.name + ".first")
    if snapshot.exists():
        shutil.rmtree(snapshot)
    shutil.copytree(out, snapshot, ignore=shutil.ignore_patterns(*EXCLUDED_FROM_TREE))
    rc2 = cli_main(["run", "--out", str(out), "--backend", args.backend, *extra])
    t2 = time.perf_counter()
    print(f"first run:  exit {rc1}, {t1 - t0:.2f}s")
    print(f"second run: exit {rc2}, {t2 - t1:.2f}s")
    print(f"identical outputs: {tree_equal(snapshot, out)}")
    shutil.rmtree(snapshot)


if __name__ == "__main__":
    main()

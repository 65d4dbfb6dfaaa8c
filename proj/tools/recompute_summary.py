#!/usr/bin/env python3
"""Recompute SR and SPL from a run directory's JSONL logs and compare them
with its summary.json.

Usage: recompute_summary.py RUN_DIR

Prints the recomputed values and exits 0 when they equal the summary
exactly, 1 otherwise.
"""

import json
import pathlib
import sys


def load_results(run_dir: pathlib.Path) -> list:
    results = []
    for path in (run_dir / "episodes").glob("episode_*.jsonl"):
        final = None
        with path.open() as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rec = json.loads(line)
                    if rec.get("type") == "result":
                        final = rec
        if final is None:
            raise SystemExit(f"{path}: no result record")
        results.append(final)
    results.sort(key=lambda r: r["episode_id"])
    return results


def recompute(results: list) -> dict:
    n = len(results)
    # Accumulate in episode-id order, same as the writer, so floats agree bit for bit.
    spl_sum = 0.0
    successes = 0
    for r in results:
        spl_sum += r["spl"]
        successes += 1 if r["success"] else 0
    return {
        "episodes": n,
        "successes": successes,
        "sr": 100.0 * successes / n if n else 0.0,
        "spl_mean": 100.0 * spl_sum / n if n else 0.0,
    }


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__, file=sys.stderr)
        return 2
    run_dir = pathlib.Path(sys.argv[1])
    summary = json.loads((run_dir / "summary.json").read_text())
    mine = recompute(load_results(run_dir))
    print(json.dumps(mine, sort_keys=True))
    mismatched = [k for k, v in mine.items() if summary.get(k) != v]
    for k in mismatched:
        print(f"mismatch {k}: summary {summary.get(k)!r} vs logs {mine[k]!r}", file=sys.stderr)
    return 1 if mismatched else 0


if __name__ == "__main__":
    sys.exit(main())

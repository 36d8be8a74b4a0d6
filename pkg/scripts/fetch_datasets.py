#!/usr/bin/env python3
"""Download the libsvm benchmark datasets used by the acceptance suite.

Usage: python scripts/fetch_datasets.py [target_dir]

Fetches breast-cancer, diabetes, and mushrooms from the libsvm binary
collection into target_dir (default: <repo>/data). Needs outbound network
access; environments without it must place the files there by other means.
"""

import sys
import urllib.request
from pathlib import Path

BASE = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/"
FILES = ["breast-cancer", "diabetes", "mushrooms"]


def main() -> int:
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data"
    target.mkdir(parents=True, exist_ok=True)
    failures = 0
    for name in FILES:
        dest = target / name
        if dest.exists():
            print(f"{name}: already present")
            continue
        url = BASE + name
        try:
            print(f"fetching {url}")
            with urllib.request.urlopen(url, timeout=60) as resp:
                dest.write_bytes(resp.read())
            print(f"{name}: {dest.stat().st_size} bytes")
        except OSError as exc:
            print(f"{name}: FAILED ({exc})", file=sys.stderr)
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())

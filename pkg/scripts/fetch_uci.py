"""Download the UCI files the built-in profiles expect into a data directory.

    python3 scripts/fetch_uci.py [--data-dir data] [--only ilpd]

Files that already exist are left alone.  Needs network access to
archive.ics.uci.edu.
"""

import argparse
import sys
import urllib.request
from pathlib import Path

BASE = "https://archive.ics.uci.edu/ml/machine-learning-databases"
SOURCES = {
    "glass": ("glass.data", f"{BASE}/glass/glass.data"),
    "wine": ("wine.data", f"{BASE}/wine/wine.data"),
    "ilpd": ("Indian Liver Patient Dataset (ILPD).csv",
             f"{BASE}/00225/Indian%20Liver%20Patient%20Dataset%20(ILPD).csv"),
}


def fetch(name: str, data_dir: Path) -> Path:
    filename, url = SOURCES[name]
    target = data_dir / filename
    if target.exists():
        print(f"{name}: {target} already present")
        return target
    with urllib.request.urlopen(url, timeout=60) as resp:
        payload = resp.read()
    data_dir.mkdir(parents=True, exist_ok=True)
    target.write_bytes(payload)
    print(f"{name}: wrote {target} ({len(payload)} bytes)")
    return target


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data-dir", type=Path, default=Path("data"))
    parser.add_argument("--only", choices=sorted(SOURCES), action="append")
    args = parser.parse_args(argv)
    status = 0
    for name in args.only or sorted(SOURCES):
        try:
            fetch(name, args.data_dir)
        except OSError as err:
            print(f"{name}: download failed: {err}", file=sys.stderr)
            status = 1
    return status


if __name__ == "__main__":
    sys.exit(main())

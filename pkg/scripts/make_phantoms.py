#!/usr/bin/env python3
"""Write the three suite phantoms (volume + truth masks + spec) to disk.

Usage: python scripts/make_phantoms.py [out_dir]
"""
import sys
from pathlib import Path

from levelseg.cli import main


def run(out_root: Path) -> None:
    for name in ("easy", "medium", "hard"):
        rc = main(["phantom", name, "--out", str(out_root / name)])
        if rc != 0:
            raise SystemExit(rc)


if __name__ == "__main__":
    run(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("phantoms"))

#!/usr/bin/env python3
"""Download and unpack the public ShARC corpus into data/sharc.

Usage: python3 scripts/fetch_sharc.py [target-dir]

Needs outbound network access.  Afterwards the acceptance criteria that
depend on the official splits run automatically (or point SHARC_DATA_DIR
elsewhere).
"""

import io
import sys
import urllib.request
import zipfile
from pathlib import Path

URL = "https://sharc-data.github.io/data/sharc1-official.zip"


def main() -> int:
    target = Path(sys.argv[1] if len(sys.argv) > 1 else "data/sharc")
    target.mkdir(parents=True, exist_ok=True)
    print(f"fetching {URL} ...")
    with urllib.request.urlopen(URL) as response:
        payload = response.read()
    with zipfile.ZipFile(io.BytesIO(payload)) as archive:
        archive.extractall(target)
    found = sorted(target.rglob("sharc_*.json"))
    if not found:
        print("archive unpacked but no sharc_*.json found", file=sys.stderr)
        return 1
    for path in found:
        print(f"  {path}")
    print("done; run `pytest tests/test_acceptance.py` to include the "
          "corpus-dependent criteria")
    return 0


if __name__ == "__main__":
    sys.exit(main())

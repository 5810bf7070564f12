#!/usr/bin/env python3
"""
Download a matrix from the SuiteSparse Matrix Collection as Matrix Market.

Usage: python scripts/fetch_suitesparse.py GROUP NAME [--out DIR]
Example: python scripts/fetch_suitesparse.py DNVS shar_te2-b3 --out matrices/
"""

import argparse
import io
import logging
import sys
import tarfile
import urllib.request
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from spmvtune.logging_config import setup_logging  # noqa: E402

BASE_URL = "https://suitesparse-collection-website.herokuapp.com/MM"

logger = logging.getLogger("spmvtune.fetch")


def fetch_matrix(group: str, name: str, out_dir, timeout: float = 60.0) -> Path:
    """Download ``group/name`` and write ``<out_dir>/<name>.mtx``."""
    url = f"{BASE_URL}/{group}/{name}.tar.gz"
    logger.info("Downloading %s", url)
    with urllib.request.urlopen(url, timeout=timeout) as response:
        payload = response.read()

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / f"{name}.mtx"
    with tarfile.open(fileobj=io.BytesIO(payload), mode="r:gz") as archive:
        member = next((m for m in archive.getmembers() if m.name.endswith(f"/{name}.mtx")), None)
        if member is None:
            raise FileNotFoundError(f"{url} holds no {name}.mtx")
        target.write_bytes(archive.extractfile(member).read())
    logger.info("Wrote %s (%d bytes)", target, target.stat().st_size)
    return target


def main():
    parser = argparse.ArgumentParser(description="Fetch a SuiteSparse matrix")
    parser.add_argument("group")
    parser.add_argument("name")
    parser.add_argument("--out", default="matrices")
    args = parser.parse_args()

    setup_logging("INFO")
    try:
        print(fetch_matrix(args.group, args.name, args.out))
    except (OSError, tarfile.TarError) as e:
        logger.error("Download failed: %s", e)
        sys.exit(2)


if __name__ == "__main__":
    main()

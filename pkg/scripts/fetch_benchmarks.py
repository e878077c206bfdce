#!/usr/bin/env python3
"""Fetch the full public flow-shop benchmark suites (needs network access).

The test fixtures vendored under tests/fixtures/ are enough for the test
suite; this script downloads the complete Taillard and VRF archives for
larger experiments. Taillard instances can also be regenerated offline
from their published time seeds via flowshop.instances.taillard_instance.
"""

import argparse
import sys
import urllib.request
from pathlib import Path

TAILLARD_URL = "http://mistic.heig-vd.ch/taillard/problemes.dir/ordonnancement.dir/flowshop.dir/tai{spec}.txt"
TAILLARD_SPECS = ["20_5", "20_10", "20_20", "50_5", "50_10", "50_20", "100_5", "100_10", "100_20", "200_10", "200_20", "500_20"]
VRF_URL = "http://soa.iti.es/files/VRF_Instances.7z"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="benchmarks", help="target directory")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ok = True
    for spec in TAILLARD_SPECS:
        url = TAILLARD_URL.format(spec=spec)
        target = out / f"tai{spec}.txt"
        try:
            urllib.request.urlretrieve(url, target)
            print(f"fetched {target}")
        except OSError as exc:
            print(f"FAILED {url}: {exc}", file=sys.stderr)
            ok = False
    try:
        urllib.request.urlretrieve(VRF_URL, out / "VRF_Instances.7z")
        print(f"fetched {out / 'VRF_Instances.7z'} (7z archive, extract separately)")
    except OSError as exc:
        print(f"FAILED {VRF_URL}: {exc}", file=sys.stderr)
        ok = False
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())

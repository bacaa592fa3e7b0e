#!/usr/bin/env python3
"""Write the full-size synthetic order/item/package log as an MDL file.

Usage: python3 scripts/generate_running_example.py [OUTPUT] [--seed N]
"""

import argparse

from ocmine.examples import generate_order_item_package_log
from ocmine.io import write_mdl


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", nargs="?", default="running_example.mdl")
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    log = generate_order_item_package_log(seed=args.seed)
    write_mdl(log, args.output)
    print(f"wrote {len(log)} events to {args.output}")
    for ot in sorted(log.object_types):
        print(f"  {ot}: {len(log.objects_of_type(ot))} objects")


if __name__ == "__main__":
    main()

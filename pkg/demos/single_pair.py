"""Calibrate one well-detuned pair, suppress its errors and print the before/after budget.

Run with ``python demos/single_pair.py``; takes a few seconds on one core.
"""

from __future__ import annotations

from ecrbudget import device, pipeline
from ecrbudget.budget import COMPONENTS


def main() -> None:
    params = device.default_ensemble().pair("Q25-Q26").params
    config = device.single_pair_config(params, seed=3)
    doc = pipeline.run_pipeline(pipeline.calibrate_device(config), suppress=True, exact=True)
    pair = next(iter(doc["pairs"].values()))
    print(f"{'component':<12}{'naive':>10}{'suppressed':>12}")
    for key in COMPONENTS:
        before = pair["naive"]["budget"]["components"][key]
        after = pair["suppressed"]["budget"]["components"][key]
        print(f"{key:<12}{before:>10.3%}{after:>12.3%}")
    print(f"{'IRB EPG':<12}{pair['naive']['budget']['irb_epg']:>10.3%}"
          f"{pair['suppressed']['budget']['irb_epg']:>12.3%}")
    print(f"ECR duration {pair['naive']['ecr_ns']:.0f} ns -> {pair['suppressed']['ecr_ns']:.0f} ns")


if __name__ == "__main__":
    main()

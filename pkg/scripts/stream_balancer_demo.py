"""Annotation-stream balancing demo: a 2% defect stream presented at a 30%
defect ratio, with production statistics kept clean of injected items.

    python scripts/stream_balancer_demo.py --items 1000 --target 0.3
"""

import argparse

import numpy as np

from loopbench.simreal import BalancerConfig, StreamBalancer
from loopbench.types import Provenance, Sample, SampleKind


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--items", type=int, default=1000)
    parser.add_argument("--defect-rate", type=float, default=0.02)
    parser.add_argument("--target", type=float, default=0.3)
    parser.add_argument("--window", type=int, default=100)
    parser.add_argument("--reserve", type=int, default=600)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    reserve = [
        Sample(id=f"inj{i}", kind=SampleKind.IMAGE, payload_ref="", features=np.zeros(2),
               provenance=Provenance.INJECTED_KNOWN_DEFECT, label="double_print")
        for i in range(args.reserve)
    ]
    balancer = StreamBalancer(
        BalancerConfig(target_ratio=args.target, window=args.window), reserve=reserve
    )
    rng = np.random.default_rng(args.seed)

    print(f"{'item':>6} {'window ratio':>13} {'injected':>9} {'reserve':>8}")
    for i in range(args.items):
        label = "interrupted_print" if rng.random() < args.defect_rate else "good"
        sample = Sample(id=f"real{i}", kind=SampleKind.IMAGE, payload_ref="",
                        features=np.zeros(2), provenance=Provenance.REAL, label=label)
        result = balancer.process(sample)
        if result.warning:
            print(f"{i:>6} WARNING: {result.warning}")
        if (i + 1) % args.window == 0:
            print(f"{i + 1:>6} {balancer.window_ratio():>13.3f} "
                  f"{balancer.injected_total:>9} {balancer.reserve_size:>8}")

    stats = balancer.production_stats()
    print("\nproduction statistics (real items only):")
    for key, value in stats.items():
        print(f"  {key}: {value}")


if __name__ == "__main__":
    main()

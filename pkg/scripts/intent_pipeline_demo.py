"""Worker-intention pipeline demo: synthetic IMU windows through featurize ->
classify -> displacement -> safe-zone command, with per-window latency.

    python scripts/intent_pipeline_demo.py --windows 12
"""

import argparse
import time

import numpy as np

from loopbench import intention
from loopbench.forecasting import BatchNet, BatchNetConfig
from loopbench.simreal import generate_imu_sequence

CORRIDOR = [(4.0, -1.0), (6.0, -1.0), (6.0, 8.0), (4.0, 8.0)]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--windows", type=int, default=12)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    train = []
    for i in range(25):
        for activity in intention.ACTIVITIES:
            s, _ = generate_imu_sequence(activity, 2.0, seed=1000 + i)
            train.append(s)
    X = np.stack([s.features for s in train])
    y = [s.label for s in train]
    net = BatchNet(sorted(set(y)), BatchNetConfig(hidden=24, seed=0, epochs=120)).fit(X, y)
    print(f"activity model trained on {len(train)} windows\n")

    rng = np.random.default_rng(args.seed)
    position = np.array([0.0, 2.0])
    heading = (1.0, 0.0)
    print(f"{'true':>9} {'predicted':>10} {'command':>13} {'latency ms':>11}")
    for i in range(args.windows):
        activity = intention.ACTIVITIES[int(rng.integers(len(intention.ACTIVITIES)))]
        _, window = generate_imu_sequence(activity, 2.0, seed=args.seed * 100 + i)
        start = time.perf_counter()
        pred = intention.classify_activity(net, window)
        disp = intention.predict_displacement(pred, heading)
        command = intention.safe_zone_command(
            intention.SafeZoneState(tuple(position), (float(disp[0]), float(disp[1])),
                                    CORRIDOR, buffer_m=1.0)
        )
        ms = (time.perf_counter() - start) * 1000
        print(f"{activity:>9} {pred.argmax:>10} {command:>13} {ms:>11.2f}")
        if command != "stop":
            position = position + np.asarray(disp) * (0.3 if command == "slow" else 1.0)


if __name__ == "__main__":
    main()

"""Operator command line: serve the gateway, generate synthetic data, run
active-learning and evaluation experiments, forecast demand, verify audit logs.

The config file (INI, one section per module) resolves from --config or the
WORKBENCH_CONFIG environment variable; every setting has a usable default.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from ..app import Workbench
from ..config import load_config
from ..experiments import (
    DATASET_PARAMS,
    run_al_curve,
    stratified_split,
    test_auc,
    train_on,
)
from ..forecasting import (
    BatchNet,
    BatchNetConfig,
    DemandSeries,
    evaluate,
    forecast_croston,
    forecast_sba,
    TwofoldForecaster,
)
from ..imaging import write_pgm
from ..simreal import generate_imu_sequence, make_logo_dataset
from .policy import AuditEntry, AuditLog, PolicySet
from .service import serve as serve_gateway


def _cmd_serve(args) -> int:
    config = load_config(args.config)
    if args.host:
        config.gateway.host = args.host
    if args.port is not None:
        config.gateway.port = args.port
    wb = Workbench(config)
    policies = None
    if config.gateway.policies_path:
        with open(config.gateway.policies_path, "r", encoding="utf-8") as fh:
            policies = PolicySet.from_docs(json.load(fh))
    service = serve_gateway(wb, policies=policies)
    print(f"workbench gateway listening on {service.base_url}")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        service.stop()
    return 0


def _cmd_simulate_quality(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    pairs = make_logo_dataset(args.n, args.defect_rate, seed=args.seed,
                              binary=args.binary, with_images=True, **DATASET_PARAMS)
    lines = []
    counts = {}
    for i, (s, img) in enumerate(pairs):
        doc = s.to_doc()
        if args.images and i < args.images:
            path = os.path.join(args.out, f"{s.id}.pgm")
            write_pgm(img, path)
            doc["payload_ref"] = path
        lines.append(json.dumps(doc))
        counts[s.label] = counts.get(s.label, 0) + 1
    path = os.path.join(args.out, "samples.jsonl")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print(json.dumps({"written": path, "n": len(pairs), "labels": counts}))
    return 0


def _cmd_simulate_demand(args) -> int:
    rng = np.random.default_rng(args.seed)
    lines = []
    for p in range(args.products):
        pid = f"product_{p:03d}"
        adi = rng.uniform(1.2, 4.0)
        size_mean = rng.uniform(2.0, 50.0)
        for t in range(args.periods):
            demand = 0.0
            if rng.random() < 1.0 / adi:
                demand = float(np.round(rng.gamma(4.0, size_mean / 4.0), 2))
            lines.append(json.dumps({"product_id": pid, "period": t, "quantity": demand}))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print(json.dumps({"written": args.out, "products": args.products,
                      "periods": args.periods}))
    return 0


def _cmd_simulate_imu(args) -> int:
    sample, window = generate_imu_sequence(args.activity, args.duration, seed=args.seed)
    lines = []
    names = list(window.channels)
    for t in range(window.length):
        frame = {"ts": int(t * 1000 / window.rate_hz)}
        frame.update({name: float(window.channels[name][t]) for name in names})
        lines.append(json.dumps(frame))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print(json.dumps({"written": args.out, "activity": args.activity,
                      "frames": window.length, "features": len(sample.features)}))
    return 0


def _cmd_al_run(args) -> int:
    data = make_logo_dataset(args.n, args.defect_rate, seed=args.seed, binary=True,
                             **DATASET_PARAMS)
    pool, test = stratified_split(data, 0.3, args.seed)
    full = test_auc(train_on(pool, args.seed), test)
    curve = run_al_curve(pool, test, args.strategy, args.seed,
                         max_labels=args.budget, full_auc=full)
    out = {
        "strategy": args.strategy,
        "seed": args.seed,
        "full_auc": full,
        "curve": [{"labels": n, "auc": a} for n, a in zip(curve.labels, curve.aucs)],
        "labels_to_95pct": curve.labels_to_reach(0.95),
    }
    print(json.dumps(out, indent=2))
    return 0


def _cmd_forecast(args) -> int:
    rows = []
    with open(args.input, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    rows = [r for r in rows if args.product is None or r["product_id"] == args.product]
    if not rows:
        print("no matching demand rows", file=sys.stderr)
        return 1
    by_product = {}
    for r in rows:
        by_product.setdefault(r["product_id"], []).append((int(r["period"]), float(r["quantity"])))
    out = []
    for pid, pts in sorted(by_product.items()):
        pts.sort()
        series = DemandSeries(pid, [p for p, _ in pts], [q for _, q in pts])
        if args.method == "croston":
            fc = forecast_croston(series, args.alpha)
            out.append({"product_id": pid, "method": "croston", "forecast": fc.next_forecast})
        elif args.method == "sba":
            fc = forecast_sba(series, args.alpha)
            out.append({"product_id": pid, "method": "sba", "forecast": fc.next_forecast})
        else:
            model = TwofoldForecaster(alpha=args.alpha, seed=0).fit(series)
            p_occ, size, point = model.predict_next()
            out.append({"product_id": pid, "method": "twofold", "forecast": point,
                        "occurrence_probability": p_occ, "expected_size": size})
    print(json.dumps(out, indent=2))
    return 0


def _cmd_eval(args) -> int:
    data = make_logo_dataset(args.n, args.defect_rate, seed=args.seed, binary=True,
                             **DATASET_PARAMS)
    X = np.stack([s.features for s in data])
    y = [s.label for s in data]

    def factory(Xt, yt):
        cfg = BatchNetConfig(hidden=32, lr=0.1, epochs=80, batch_size=32, seed=args.seed)
        return BatchNet(sorted(set(yt)), cfg).fit(Xt, yt)

    metrics = evaluate(factory, X, y, positive="defect", folds=args.folds, seed=args.seed)
    print(json.dumps({"folds": args.folds, "n": args.n, "metrics": metrics}, indent=2))
    return 0


def _cmd_audit_verify(args) -> int:
    entries = []
    with open(args.log, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(AuditEntry.from_doc(json.loads(line)))
    valid, first_bad = AuditLog.verify(entries)
    print(json.dumps({"entries": len(entries), "valid": valid, "first_bad_seq": first_bad}))
    return 0 if valid else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loopbench",
                                     description="Human-in-the-loop industrial AI workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP gateway")
    p.add_argument("--config", default=None, help="INI config path (or $WORKBENCH_CONFIG)")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(fn=_cmd_serve)

    sim = sub.add_parser("simulate", help="generate synthetic data")
    sim_sub = sim.add_subparsers(dest="what", required=True)

    q = sim_sub.add_parser("quality", help="synthetic inspection images")
    q.add_argument("--n", type=int, default=500)
    q.add_argument("--defect-rate", type=float, default=0.05)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--binary", action="store_true", help="collapse defect kinds")
    q.add_argument("--images", type=int, default=25, help="how many PGM payloads to write")
    q.add_argument("--out", default="quality_data")
    q.set_defaults(fn=_cmd_simulate_quality)

    d = sim_sub.add_parser("demand", help="synthetic intermittent demand series")
    d.add_argument("--products", type=int, default=10)
    d.add_argument("--periods", type=int, default=104)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", default="demand.jsonl")
    d.set_defaults(fn=_cmd_simulate_demand)

    m = sim_sub.add_parser("imu", help="synthetic IMU frames")
    m.add_argument("--activity", default="walk",
                   choices=["idle", "walk", "assemble", "carry"])
    m.add_argument("--duration", type=float, default=10.0)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", default="imu.jsonl")
    m.set_defaults(fn=_cmd_simulate_imu)

    a = sub.add_parser("al-run", help="one active-learning curve on synthetic data")
    a.add_argument("--strategy", default="uncertainty", choices=["uncertainty", "random"])
    a.add_argument("--budget", type=int, default=400, help="max labels to spend")
    a.add_argument("--seed", type=int, default=1)
    a.add_argument("--n", type=int, default=2000)
    a.add_argument("--defect-rate", type=float, default=0.05)
    a.set_defaults(fn=_cmd_al_run)

    f = sub.add_parser("forecast", help="forecast demand series from a JSONL file")
    f.add_argument("--method", default="croston", choices=["croston", "sba", "twofold"])
    f.add_argument("--input", required=True)
    f.add_argument("--product", default=None)
    f.add_argument("--alpha", type=float, default=0.1)
    f.set_defaults(fn=_cmd_forecast)

    e = sub.add_parser("eval", help="stratified k-fold evaluation on synthetic data")
    e.add_argument("--n", type=int, default=600)
    e.add_argument("--defect-rate", type=float, default=0.1)
    e.add_argument("--folds", type=int, default=10)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(fn=_cmd_eval)

    au = sub.add_parser("audit", help="audit log tools")
    au_sub = au.add_subparsers(dest="what", required=True)
    v = au_sub.add_parser("verify", help="verify the audit hash chain")
    v.add_argument("--log", required=True)
    v.set_defaults(fn=_cmd_audit_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

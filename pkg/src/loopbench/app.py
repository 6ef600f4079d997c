"""Workbench assembly: one object owning the bus, storage, models, queue, and
module controllers. The HTTP gateway and the CLI are thin layers over this.

Module interactions stay on the bus or in storage; the assembly only
orchestrates (ingest -> select -> lease -> answer -> retrain) and publishes
the corresponding events.
"""

from __future__ import annotations

import json
import threading
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import active_learning as al
from . import xai
from .bus import EventBus
from .config import WorkbenchConfig
from .decisions import DecisionEngine, FeedbackRecord, make_feedback
from .errors import ColdModelError, NotFoundError
from .forecasting import (
    BatchNet,
    BatchNetConfig,
    StreamingKnn,
    TwofoldForecaster,
    forecast_croston,
    forecast_sba,
)
from .forecasting.demand import DemandSeries
from .imaging import extract_image_features, image_feature_names
from .intention import (
    ImuWindow,
    SafeZoneState,
    classify_activity,
    predict_displacement,
    safe_zone_command,
)
from .simreal import BalancerConfig, StreamBalancer, simulate_scenario, Adjustment, ScenarioSpec
from .storage import DocumentStore, EventLog
from .types import GrayImage, Prediction, Provenance, Sample, SampleKind, now_ms


class Workbench:
    def __init__(self, config: Optional[WorkbenchConfig] = None):
        self.config = config or WorkbenchConfig()
        self.store = DocumentStore()
        self.bus = EventBus(log=EventLog(self.config.bus.log_path))
        self.queue = al.AnnotationQueue(
            lease_ttl_ms=int(self.config.active_learning.lease_ttl_s * 1000)
        )
        self.decisions = DecisionEngine()
        self.balancer = StreamBalancer(
            BalancerConfig(
                target_ratio=self.config.simreal.target_defect_ratio,
                window=self.config.simreal.balancer_window,
            )
        )
        self.enrichment_client: Optional[object] = None
        if self.config.gateway.enrichment_fixtures_path:
            self.enrichment_client = xai.FixtureEnrichmentClient(
                path=self.config.gateway.enrichment_fixtures_path
            )
        if self.config.gateway.rules_path:
            with open(self.config.gateway.rules_path, "r", encoding="utf-8") as fh:
                self.decisions.load_rules(json.load(fh))
        self.concept_map = default_concept_map()

        self._lock = threading.RLock()
        self._select_lock = threading.Lock()  # one selection round at a time
        self._samples: Dict[str, Sample] = {}
        self._eligible: Dict[str, bool] = {}
        self._labels: Dict[str, str] = {}  # sample_id -> latest label
        self._model: Optional[BatchNet] = None
        self._stream_model: Optional[StreamingKnn] = None
        self._classes: Optional[Tuple[str, ...]] = None
        self._labels_since_retrain = 0
        self._model_version = 0

        self._activity_model: Optional[BatchNet] = None
        self._last_intent: Dict[str, object] = {
            "command": "proceed_fast",
            "activity": None,
            "ts": None,
        }
        self._heading = (1.0, 0.0)
        self._position = (0.0, 0.0)

    # ------------------------------------------------------------------
    # samples and pool

    def add_sample(self, doc: dict, actor: str = "system") -> Sample:
        sample = Sample.from_doc(doc)
        eligible = bool(doc.get("eligible_for_query", True))
        payload = doc.get("payload")
        with self._lock:
            self._samples[sample.id] = sample
            self._eligible[sample.id] = eligible
            if sample.label is not None:
                self._labels[sample.id] = sample.label
        if payload is not None and sample.payload_ref:
            self.store.put(sample.payload_ref, payload)
        self.store.put(f"samples/{sample.id}", sample.to_doc())
        self.bus.publish("samples", {"sample_id": sample.id, "kind": sample.kind.value},
                         actor=actor)
        if self.queue.pending() == 0:
            self._maybe_select(actor="active-learning")
        return sample

    def add_samples(self, samples: Sequence[Sample], actor: str = "system",
                    eligible: bool = True) -> None:
        for s in samples:
            with self._lock:
                self._samples[s.id] = s
                self._eligible[s.id] = eligible
                if s.label is not None:
                    self._labels[s.id] = s.label
            self.store.put(f"samples/{s.id}", s.to_doc())

    def sample(self, sample_id: str) -> Sample:
        with self._lock:
            if sample_id not in self._samples:
                raise NotFoundError(f"no sample {sample_id!r}")
            return self._samples[sample_id]

    def unlabeled_pool(self) -> List[Sample]:
        queued = self.queue.active_sample_ids()
        with self._lock:
            return [
                s
                for sid, s in self._samples.items()
                if sid not in self._labels
                and self._eligible.get(sid, True)
                and sid not in queued
                and s.provenance == Provenance.REAL
            ]

    def labeled_samples(self) -> List[Sample]:
        with self._lock:
            out = []
            for sid, label in self._labels.items():
                s = self._samples.get(sid)
                if s is None:
                    continue
                if s.label == label:
                    out.append(s)
                else:
                    out.append(Sample(
                        id=s.id, kind=s.kind, payload_ref=s.payload_ref,
                        features=s.features, provenance=s.provenance,
                        label=label, created_at=s.created_at,
                    ))
            return out

    # ------------------------------------------------------------------
    # models

    def retrain(self, seed: Optional[int] = None) -> Optional[BatchNet]:
        labeled = self.labeled_samples()
        classes = sorted({s.label for s in labeled})
        if len(classes) < 2:
            return None
        fc = self.config.forecasting
        cfg = BatchNetConfig(
            hidden=fc.hidden, lr=fc.lr, epochs=fc.epochs,
            batch_size=fc.batch_size, seed=fc.seed if seed is None else seed,
        )
        train_set = list(labeled)
        if fc.balance_training and len(classes) == 2:
            from .simreal import oversample_minority

            by_class: Dict[str, int] = {}
            for s in labeled:
                by_class[s.label] = by_class.get(s.label, 0) + 1
            if min(by_class.values()) >= 2:
                train_set = train_set + oversample_minority(
                    labeled, target_ratio=0.5, seed=cfg.seed
                )
        X = np.stack([s.features for s in train_set])
        y = [s.label for s in train_set]
        model = BatchNet(classes, config=cfg, model_id=f"batch-net-v{self._model_version + 1}")
        model.fit(X, y)
        with self._lock:
            self._model = model
            self._classes = tuple(classes)
            self._model_version += 1
            if self._stream_model is None or self._stream_model.classes != tuple(classes):
                knn = StreamingKnn(classes, k=fc.knn_k, window=fc.knn_window)
                for s in labeled:
                    knn.learn(s.features, s.label)
                self._stream_model = knn
        self.bus.publish(
            "predictions",
            {"event": "model_retrained", "model_id": model.model_id,
             "n_labeled": len(labeled)},
            actor="forecasting",
        )
        return model

    @property
    def model(self) -> Optional[BatchNet]:
        with self._lock:
            return self._model

    def predict_sample(self, sample_id: str, actor: str = "forecasting") -> Prediction:
        sample = self.sample(sample_id)
        with self._lock:
            model = self._model
        if model is None:
            raise ColdModelError("no trained model yet")
        pred = model.predict(sample)
        self.store.put(f"predictions/{sample_id}", pred.to_doc())
        return pred

    # ------------------------------------------------------------------
    # active learning loop

    def _maybe_select(self, actor: str) -> List[al.QueryTask]:
        pool = self.unlabeled_pool()
        if not pool:
            return []
        return self.select_round(actor=actor)

    def select_round(self, batch_size: Optional[int] = None,
                     actor: str = "active-learning") -> List[al.QueryTask]:
        """Score the pool with the current model and enqueue the next batch.

        Serialized: concurrent triggers cannot enqueue the same sample twice.
        """
        with self._select_lock:
            return self._select_round_locked(batch_size, actor)

    def _select_round_locked(self, batch_size: Optional[int], actor: str) -> List[al.QueryTask]:
        alc = self.config.active_learning
        batch = batch_size or alc.batch_size
        pool = self.unlabeled_pool()
        if not pool:
            return []
        with self._lock:
            model = self._model
            seed = alc.seed + self._model_version
        if model is None:
            params = al.StrategyParams(name="random", seed=seed)
            selected, scores, truncated = al.select_pool(pool, params, batch)
        else:
            predictions = [model.predict(s) for s in pool]
            name = alc.strategy
            params = al.StrategyParams(name=name, seed=seed)
            labeled = self.labeled_samples() if name == "combined" else None
            selected, scores, truncated = al.select_pool(
                pool, params, batch, predictions=predictions, labeled=labeled
            )
        tasks = []
        for s, score in zip(selected, scores):
            hints = self._make_hints(s) if alc.attach_hints else []
            task = self.queue.enqueue(s.id, params.name, score, hints=hints)
            self.store.put(f"tasks/{task.task_id}", task.to_doc())
            self.bus.publish(
                "queries",
                {"event": "task_enqueued", "task": task.to_doc()},
                actor=actor,
            )
            tasks.append(task)
        if truncated:
            self.bus.publish(
                "queries",
                {"event": "selection_truncated", "requested": batch, "pool": len(pool)},
                actor=actor,
            )
        return tasks

    def _image_of(self, sample: Sample) -> Optional[GrayImage]:
        if sample.kind != SampleKind.IMAGE or not sample.payload_ref:
            return None
        if not self.store.contains(sample.payload_ref):
            return None
        doc = self.store.get(sample.payload_ref)
        try:
            return GrayImage(width=doc["width"], height=doc["height"], pixels=doc["pixels"])
        except (KeyError, ValueError, TypeError):
            return None

    def _make_hints(self, sample: Sample) -> List[str]:
        """Attach whichever hint kinds the stored data supports right now."""
        image = self._image_of(sample)
        if image is None:
            return []
        hints = []
        with self._lock:
            model = self._model
        gallery = []
        good_refs = []
        for s in self.labeled_samples():
            img = self._image_of(s)
            if img is None:
                continue
            gallery.append((img, s.label, s.id))
            if s.label == "good" and len(good_refs) < 25:
                good_refs.append(img)
        pred = None
        if model is not None:
            pred = model.predict(sample)
        if pred is not None:
            def predict_image(img: GrayImage) -> np.ndarray:
                return model.predict_proba(extract_image_features(img).reshape(1, -1))[0]

            expl = xai.saliency_occlusion(predict_image, image, pred)
            self._store_explanation(expl)
            hints.append(expl.id)
        if len(good_refs) >= 10:
            expl = xai.anomaly_map(image, good_refs, prediction_ref=sample.id)
            self._store_explanation(expl)
            hints.append(expl.id)
        if gallery:
            expl = xai.nearest_hint(image, gallery, prediction_ref=sample.id)
            neighbor = self.sample(expl.payload["neighbor_ref"])
            if neighbor.payload_ref and self.store.contains(neighbor.payload_ref):
                expl.payload["neighbor_payload"] = self.store.get(neighbor.payload_ref)
            self._store_explanation(expl)
            hints.append(expl.id)
        return hints

    def _store_explanation(self, expl: xai.Explanation) -> None:
        self.store.put(f"explanations/{expl.id}", expl.to_doc())
        self.bus.publish("explanations", {"explanation_id": expl.id, "kind": expl.kind},
                         actor="xai")

    def queue_next(self, annotator: str) -> Optional[al.QueryTask]:
        task = self.queue.lease_next(annotator)
        if task is None:
            self._maybe_select(actor="active-learning")
            task = self.queue.lease_next(annotator)
        if task is not None:
            self.store.put(f"tasks/{task.task_id}", task.to_doc())
        return task

    def annotation_view(self, task: al.QueryTask) -> dict:
        """Task document enriched with whatever the console needs to render:
        the inspected image payload and a known-good reference, when stored."""
        doc = task.to_doc()
        sample = self.sample(task.sample_id)
        image = self._image_of(sample)
        if image is not None:
            doc["sample_payload"] = self.store.get(sample.payload_ref)
        for s in self.labeled_samples():
            if s.label == "good":
                ref = self._image_of(s)
                if ref is not None:
                    doc["reference_payload"] = self.store.get(s.payload_ref)
                    doc["reference_label"] = s.label
                    break
        doc["label_choices"] = sorted(
            {s.label for s in self.labeled_samples() if s.label}
            | {"good", "double_print", "interrupted_print"}
        )
        return doc

    def submit_label(self, task_id: str, annotator: str, label: str,
                     elapsed_ms: int, hint_shown: Optional[str] = None) -> al.LabelRecord:
        record = self.queue.answer(task_id, annotator, label, elapsed_ms, hint_shown)
        with self._lock:
            self._labels[record.sample_id] = label
            self._labels_since_retrain += 1
            should_retrain = self._labels_since_retrain >= self.config.active_learning.retrain_every
            if should_retrain:
                self._labels_since_retrain = 0
            stream_model = self._stream_model
        self.store.put(f"labels/{record.record_id}", record.to_doc())
        self.store.put(f"tasks/{task_id}", self.queue.get(task_id).to_doc())
        self.bus.publish("labels", {"event": "label_recorded", "record": record.to_doc()},
                         actor=annotator)
        if stream_model is not None and label in stream_model.classes:
            stream_model.learn(self.sample(record.sample_id).features, label)
        if should_retrain:
            self.retrain()
        return record

    # ------------------------------------------------------------------
    # demand

    def ingest_demand(self, doc_lines: Sequence[dict], actor: str = "ingest") -> List[str]:
        """Line-delimited {product_id, period, quantity} docs -> stored series."""
        grouped: Dict[str, List[Tuple[int, float]]] = {}
        for doc in doc_lines:
            grouped.setdefault(doc["product_id"], []).append(
                (int(doc["period"]), float(doc["quantity"]))
            )
        ids = []
        for pid, rows in grouped.items():
            rows.sort()
            series = DemandSeries(
                product_id=pid,
                periods=[r[0] for r in rows],
                quantities=[r[1] for r in rows],
            )
            self.store.put(f"demand/{pid}", series.to_doc())
            ids.append(pid)
        return ids

    def demand_series(self, product_id: str) -> DemandSeries:
        return DemandSeries.from_doc(self.store.get(f"demand/{product_id}"))

    def forecast(self, product_id: str, method: str = "croston",
                 alpha: Optional[float] = None) -> dict:
        series = self.demand_series(product_id)
        alpha = alpha if alpha is not None else self.config.forecasting.croston_alpha
        if method == "croston":
            fc = forecast_croston(series, alpha)
            out = {"method": method, "forecast": fc.next_forecast}
        elif method == "sba":
            fc = forecast_sba(series, alpha)
            out = {"method": method, "forecast": fc.next_forecast}
        elif method == "twofold":
            model = TwofoldForecaster(alpha=alpha, seed=self.config.forecasting.seed)
            model.fit(series)
            p_occ, size, point = model.predict_next()
            out = {
                "method": method,
                "forecast": point,
                "occurrence_probability": p_occ,
                "expected_size": size,
            }
        else:
            raise ValueError(f"unknown forecast method {method!r}")
        out["product_id"] = product_id
        self.store.put(f"forecasts/{product_id}", out)
        return out

    def whatif(self, doc: dict, actor: str = "planner") -> dict:
        series = self.demand_series(doc["product_id"])
        adjustments = [
            Adjustment(
                period_start=int(a["period_start"]),
                period_end=int(a["period_end"]),
                multiplier=a.get("multiplier"),
                delta=a.get("delta"),
            )
            for a in doc.get("adjustments", [])
        ]
        alpha = self.config.forecasting.croston_alpha
        method = doc.get("method", "croston")
        forecaster = {
            "croston": lambda s: forecast_croston(s, alpha),
            "sba": lambda s: forecast_sba(s, alpha),
        }.get(method)
        if forecaster is None:
            raise ValueError(f"unknown forecast method {method!r}")
        result = simulate_scenario(
            ScenarioSpec(base=series, adjustments=adjustments, label=doc.get("label", "")),
            forecaster=forecaster,
        )
        out = {
            "product_id": doc["product_id"],
            "label": doc.get("label", ""),
            "base_forecast": result.base_forecast.next_forecast,
            "scenario_forecast": result.adjusted_forecast.next_forecast,
            "delta": result.delta,
            "base_quantities": list(result.base_series.quantities),
            "scenario_quantities": list(result.adjusted_series.quantities),
        }
        self.bus.publish("scenarios", {"event": "whatif", "product_id": doc["product_id"],
                                       "delta": out["delta"]}, actor=actor)
        return out

    # ------------------------------------------------------------------
    # feedback / knowledge

    def record_feedback(self, doc: dict, actor: str) -> FeedbackRecord:
        record = make_feedback(
            subject_kind=doc["subject_kind"],
            subject_ref=doc["subject_ref"],
            signal=doc["signal"],
            actor=actor,
            rating=doc.get("rating"),
            free_text=doc.get("free_text"),
        )

        def subject_exists(kind: str, ref: str) -> bool:
            prefix = {"prediction": "predictions/", "explanation": "explanations/"}[kind]
            return self.store.contains(prefix + ref) or self.store.contains(f"samples/{ref}")

        self.decisions.record_feedback(record, subject_exists=subject_exists)
        self.store.put(f"feedback/{record.id}", record.to_doc())
        self.bus.publish("feedback", {"event": "feedback", "record": record.to_doc()},
                         actor=actor)
        return record

    def capture_knowledge(self, doc: dict, actor: str):
        fact = self.decisions.capture_knowledge(
            actor,
            subject=doc["subject"],
            relation=doc["relation"],
            obj=doc["object"],
            source=doc.get("source", "user_feedback"),
        )
        self.store.put(
            f"knowledge/{fact.subject}|{fact.relation}|{fact.object}", fact.to_doc()
        )
        return fact

    # ------------------------------------------------------------------
    # intention

    def train_activity_model(self, samples: Sequence[Sample], seed: int = 0) -> BatchNet:
        classes = sorted({s.label for s in samples if s.label})
        cfg = BatchNetConfig(hidden=24, lr=0.1, epochs=150, batch_size=32, seed=seed)
        model = BatchNet(classes, config=cfg, model_id="activity-net")
        X = np.stack([s.features for s in samples])
        y = [s.label for s in samples]
        model.fit(X, y)
        with self._lock:
            self._activity_model = model
        return model

    def process_imu_window(self, window: ImuWindow, position: Optional[Tuple[float, float]] = None,
                           heading: Optional[Tuple[float, float]] = None,
                           actor: str = "intention") -> dict:
        with self._lock:
            model = self._activity_model
            position = position or self._position
            heading = heading or self._heading
        pred = classify_activity(model, window)
        disp = predict_displacement(pred, heading, horizon_s=self.config.intention.horizon_s)
        state = SafeZoneState(
            position=position,
            displacement=(float(disp[0]), float(disp[1])),
            corridor=[tuple(v) for v in self.config.intention.corridor],
            buffer_m=self.config.intention.buffer_m,
        )
        command = safe_zone_command(state)
        out = {
            "command": command,
            "activity": pred.argmax,
            "activity_scores": {c: float(s) for c, s in zip(pred.classes, pred.scores)},
            "displacement": [float(disp[0]), float(disp[1])],
            "position": list(position),
            "ts": now_ms(),
        }
        with self._lock:
            self._last_intent = out
        self.store.put("intent/command", out)
        self.bus.publish("intent", out, actor=actor)
        return out

    def intent_command(self) -> dict:
        with self._lock:
            return dict(self._last_intent)

    # ------------------------------------------------------------------
    # explanations through policy redaction

    def explanation(self, explanation_id: str, redaction: str = "full") -> dict:
        doc = self.store.get(f"explanations/{explanation_id}")
        expl = xai.Explanation.from_doc(doc)
        if redaction == "concept_only" and expl.kind == "feature_ranking":
            expl = xai.map_to_concepts(expl, self.concept_map, redaction="concept_only")
        return expl.to_doc()

    def stream_metrics(self) -> dict:
        stats = self.balancer.production_stats()
        with self._lock:
            stats["model_version"] = self._model_version
            stats["labels"] = len(self._labels)
            stats["samples"] = len(self._samples)
        stats["queue"] = self.queue.counts()
        return stats


def default_concept_map() -> xai.ConceptMap:
    """Concepts over the deterministic image embedding plus demand features."""
    entries: Dict[str, str] = {}
    for name in image_feature_names():
        if name.startswith("blk_"):
            r = int(name.split("_")[1])
            entries[name] = "logo_top_region" if r < 4 else "logo_bottom_region"
        elif name.startswith("rowband_") or name.startswith("colband_"):
            entries[name] = "print_profile"
        elif name in ("px_mean", "ink_frac"):
            entries[name] = "ink_coverage"
        else:
            entries[name] = "print_sharpness"
    for i in range(1, 9):
        entries[f"lag_{i}"] = "recent_demand"
    entries["period_index"] = "calendar_position"
    entries["rolling_rate"] = "demand_frequency"
    labels = {
        "logo_top_region": "Upper print area",
        "logo_bottom_region": "Lower print area",
        "print_profile": "Print intensity profile",
        "ink_coverage": "Ink coverage",
        "print_sharpness": "Print sharpness",
        "recent_demand": "Recent demand occurrences",
        "calendar_position": "Calendar position",
        "demand_frequency": "Demand frequency",
    }
    return xai.ConceptMap(entries=entries, labels=labels)

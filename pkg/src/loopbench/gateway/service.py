"""HTTP/JSON service surface under /v1 with policy enforcement, per-request
audit, redaction of explanation payloads, and a server-sent-events push
channel for the queue and intent topics.

Every request is policy-checked before dispatch and appends exactly one audit
entry whatever its outcome. Roles are asserted via the X-Role header (desk
mode; a fronting proxy owns real authentication).
"""

from __future__ import annotations

import json
import threading
import time
import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Dict, List, Optional, Tuple

from ..app import Workbench
from ..errors import ColdModelError, LeaseError, NotFoundError, PolicyLoadError
from .policy import AuditLog, PolicySet, default_policies

API_PREFIX = "/v1"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details: Optional[dict] = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details or {}


def _error_body(code: str, message: str, details: Optional[dict] = None) -> dict:
    return {"code": code, "message": message, "details": details or {}}


class GatewayService:
    """Owns the policy set, the audit log, and the HTTP server lifecycle."""

    def __init__(self, workbench: Workbench, policies: Optional[PolicySet] = None,
                 audit: Optional[AuditLog] = None,
                 host: str = "127.0.0.1", port: int = 8787):
        self.workbench = workbench
        self._policies = policies if policies is not None else default_policies()
        self.audit = audit if audit is not None else AuditLog(
            workbench.config.gateway.audit_log_path
        )
        self.host = host
        self.port = port
        self._policy_lock = threading.Lock()
        self._server: Optional[ThreadingHTTPServer] = None
        self._thread: Optional[threading.Thread] = None
        self._routes = _build_routes()

    # -- policy handling -----------------------------------------------------

    @property
    def policies(self) -> PolicySet:
        with self._policy_lock:
            return self._policies

    def reload_policies(self, docs: List[dict]) -> int:
        new_set = PolicySet.from_docs(docs)
        with self._policy_lock:
            self._policies = new_set
        self.workbench.bus.publish("policy", {"event": "policies_reloaded",
                                              "count": len(new_set)}, actor="policy-manager")
        return len(new_set)

    # -- lifecycle -------------------------------------------------------------

    def start(self) -> "GatewayService":
        handler = _make_handler(self)
        self._server = ThreadingHTTPServer((self.host, self.port), handler)
        self._server.daemon_threads = True
        self.port = self._server.server_address[1]
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}{API_PREFIX}"


# --------------------------------------------------------------------------
# routing


def _match(pattern: str, path: str) -> Optional[Dict[str, str]]:
    p_segs = [s for s in pattern.split("/") if s]
    r_segs = [s for s in path.split("/") if s]
    if len(p_segs) != len(r_segs):
        return None
    params: Dict[str, str] = {}
    for p, r in zip(p_segs, r_segs):
        if p.startswith("{") and p.endswith("}"):
            params[p[1:-1]] = urllib.parse.unquote(r)
        elif p != r:
            return None
    return params


def _build_routes() -> List[Tuple[str, str, str]]:
    # (method, pattern, handler attribute on _Handler)
    return [
        ("POST", "/samples", "h_post_samples"),
        ("GET", "/queue/next", "h_queue_next"),
        ("POST", "/labels", "h_post_labels"),
        ("GET", "/predictions/{sample_id}", "h_get_prediction"),
        ("GET", "/explanations/{explanation_id}", "h_get_explanation"),
        ("GET", "/forecasts/{product_id}", "h_get_forecast"),
        ("POST", "/whatif", "h_post_whatif"),
        ("GET", "/options", "h_get_options"),
        ("POST", "/feedback", "h_post_feedback"),
        ("POST", "/knowledge", "h_post_knowledge"),
        ("GET", "/intent/command", "h_intent_command"),
        ("GET", "/stream/metrics", "h_stream_metrics"),
        ("POST", "/policies", "h_post_policies"),
        ("GET", "/audit", "h_get_audit"),
        ("GET", "/events", "h_events"),
    ]


def _make_handler(service: GatewayService):
    class _Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"
        _service = service

        # quiet the default stderr access log
        def log_message(self, fmt, *args):  # noqa: D401
            pass

        # -- plumbing --------------------------------------------------

        def _json_body(self) -> dict:
            length = int(self.headers.get("Content-Length", 0))
            if length == 0:
                return {}
            raw = self.rfile.read(length)
            try:
                return json.loads(raw.decode("utf-8"))
            except json.JSONDecodeError as exc:
                raise ApiError(400, "bad_json", f"request body is not valid JSON: {exc}")

        def _send_json(self, status: int, body) -> None:
            data = json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(data)

        def _send_empty(self, status: int) -> None:
            self.send_response(status)
            self.send_header("Content-Length", "0")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()

        # -- entry points ------------------------------------------------

        def do_GET(self) -> None:
            self._handle("GET")

        def do_POST(self) -> None:
            self._handle("POST")

        def _handle(self, method: str) -> None:
            parsed = urllib.parse.urlparse(self.path)
            path = parsed.path
            self.query = urllib.parse.parse_qs(parsed.query)
            role = self.headers.get("X-Role", "")
            actor = self.headers.get("X-Actor", role or "anonymous")
            action = "read" if method == "GET" else "write"

            if not path.startswith(API_PREFIX + "/"):
                self._service.audit.append(actor, action, path, "not_found")
                self._send_json(404, _error_body("not_found", f"no such path {path!r}"))
                return
            resource = path[len(API_PREFIX):]

            effect, redaction = self._service.policies.evaluate(role, resource, action)
            if effect != "allow":
                self._service.audit.append(actor, action, resource, "denied")
                self._send_json(
                    403,
                    _error_body("forbidden", f"role {role!r} may not {action} {resource}",
                                {"role": role, "resource": resource}),
                )
                return
            self.redaction = redaction
            self.actor = actor

            for m, pattern, attr in self._service._routes:
                if m != method:
                    continue
                params = _match(pattern, resource)
                if params is None:
                    continue
                try:
                    outcome = getattr(self, attr)(**params)
                except ApiError as exc:
                    self._service.audit.append(actor, action, resource, f"error:{exc.code}")
                    self._send_json(exc.status, _error_body(exc.code, exc.message, exc.details))
                except NotFoundError as exc:
                    self._service.audit.append(actor, action, resource, "error:not_found")
                    self._send_json(404, _error_body("not_found", str(exc)))
                except (LeaseError, ColdModelError) as exc:
                    code = "lease_conflict" if isinstance(exc, LeaseError) else "cold_model"
                    self._service.audit.append(actor, action, resource, f"error:{code}")
                    self._send_json(409, _error_body(code, str(exc)))
                except PolicyLoadError as exc:
                    self._service.audit.append(actor, action, resource, "error:bad_policy")
                    self._send_json(400, _error_body("bad_policy", str(exc)))
                except (ValueError, KeyError, TypeError) as exc:
                    self._service.audit.append(actor, action, resource, "error:bad_request")
                    self._send_json(400, _error_body("bad_request", str(exc)))
                else:
                    self._service.audit.append(actor, action, resource, outcome or "ok")
                return

            self._service.audit.append(actor, action, resource, "not_found")
            self._send_json(404, _error_body("not_found", f"no route for {method} {resource}"))

        # -- handlers (return the audit outcome string) -------------------

        def h_post_samples(self) -> str:
            doc = self._json_body()
            sample = self._service.workbench.add_sample(doc, actor=self.actor)
            self._send_json(201, {"sample_id": sample.id})
            return "ok"

        def h_queue_next(self) -> str:
            task = self._service.workbench.queue_next(self.actor)
            if task is None:
                self._send_empty(204)
                return "empty"
            self._send_json(200, self._service.workbench.annotation_view(task))
            return "ok"

        def h_post_labels(self) -> str:
            doc = self._json_body()
            record = self._service.workbench.submit_label(
                task_id=doc["task_id"],
                annotator=self.actor,
                label=doc["label"],
                elapsed_ms=int(doc.get("elapsed_ms", 0)),
                hint_shown=doc.get("hint_shown"),
            )
            self._send_json(201, record.to_doc())
            return "ok"

        def h_get_prediction(self, sample_id: str) -> str:
            wb = self._service.workbench
            key = f"predictions/{sample_id}"
            if wb.store.contains(key):
                current = wb.store.get(key)
                if wb.model is not None and current.get("model_id") != wb.model.model_id:
                    current = wb.predict_sample(sample_id).to_doc()
            else:
                current = wb.predict_sample(sample_id).to_doc()
            self._send_json(200, current)
            return "ok"

        def h_get_explanation(self, explanation_id: str) -> str:
            doc = self._service.workbench.explanation(explanation_id, redaction=self.redaction)
            self._send_json(200, doc)
            return "ok"

        def h_get_forecast(self, product_id: str) -> str:
            method = self.query.get("method", ["croston"])[0]
            alpha = self.query.get("alpha")
            out = self._service.workbench.forecast(
                product_id, method=method, alpha=float(alpha[0]) if alpha else None
            )
            self._send_json(200, out)
            return "ok"

        def h_post_whatif(self) -> str:
            out = self._service.workbench.whatif(self._json_body(), actor=self.actor)
            self._send_json(200, out)
            return "ok"

        def h_get_options(self) -> str:
            if "context" in self.query:
                try:
                    context = json.loads(self.query["context"][0])
                except json.JSONDecodeError as exc:
                    raise ApiError(400, "bad_context", f"context is not valid JSON: {exc}")
            else:
                context = {k: float(v[0]) for k, v in self.query.items()}
            options = self._service.workbench.decisions.recommend(context)
            self._send_json(200, {"options": options})
            return "ok"

        def h_post_feedback(self) -> str:
            record = self._service.workbench.record_feedback(self._json_body(), actor=self.actor)
            self._send_json(201, record.to_doc())
            return "ok"

        def h_post_knowledge(self) -> str:
            fact = self._service.workbench.capture_knowledge(self._json_body(), actor=self.actor)
            self._send_json(201, fact.to_doc())
            return "ok"

        def h_intent_command(self) -> str:
            self._send_json(200, self._service.workbench.intent_command())
            return "ok"

        def h_stream_metrics(self) -> str:
            self._send_json(200, self._service.workbench.stream_metrics())
            return "ok"

        def h_post_policies(self) -> str:
            docs = self._json_body()
            if not isinstance(docs, list):
                raise ApiError(400, "bad_request", "policy body must be a JSON list")
            count = self._service.reload_policies(docs)
            self._send_json(200, {"loaded": count})
            return "ok"

        def h_get_audit(self) -> str:
            entries = self._service.audit.entries()
            valid, first_bad = AuditLog.verify(entries)
            self._send_json(
                200,
                {
                    "entries": [e.to_doc() for e in entries],
                    "valid": valid,
                    "first_bad_seq": first_bad,
                },
            )
            return "ok"

        def h_events(self) -> str:
            topics = self.query.get("topics", ["queries,intent"])[0].split(",")
            bus = self._service.workbench.bus
            subs = [bus.subscribe(t.strip()) for t in topics if t.strip()]
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            try:
                self.wfile.write(b": connected\n\n")
                self.wfile.flush()
                last_beat = time.monotonic()
                while True:
                    delivered = False
                    for sub in subs:
                        event = sub.poll(timeout=0.05)
                        while event is not None:
                            chunk = (
                                f"event: {event.topic}\n"
                                f"id: {event.seq}\n"
                                f"data: {json.dumps(event.to_doc())}\n\n"
                            )
                            self.wfile.write(chunk.encode("utf-8"))
                            delivered = True
                            event = sub.poll(timeout=0.0)
                    if delivered:
                        self.wfile.flush()
                    if time.monotonic() - last_beat > 2.0:
                        self.wfile.write(b": keepalive\n\n")
                        self.wfile.flush()
                        last_beat = time.monotonic()
            except (BrokenPipeError, ConnectionResetError, OSError):
                pass
            finally:
                for sub in subs:
                    bus.unsubscribe(sub)
            return "stream_closed"

    return _Handler


def serve(workbench: Workbench, host: Optional[str] = None, port: Optional[int] = None,
          policies: Optional[PolicySet] = None) -> GatewayService:
    """Start the gateway; raises on port conflicts."""
    gw_cfg = workbench.config.gateway
    service = GatewayService(
        workbench,
        policies=policies,
        host=host if host is not None else gw_cfg.host,
        port=port if port is not None else gw_cfg.port,
    )
    return service.start()

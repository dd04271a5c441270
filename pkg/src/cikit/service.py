"""HTTP reward service.

Exposes the rule-based reward and case lookup over JSON/HTTP so external
training loops can consume rewards without importing the library:

    POST /v1/reward          batch rewards; per-item errors never fail the batch
    GET  /v1/cases/{id}      case metadata, gold hidden unless explicitly enabled
    GET  /v1/health          {"status": "ok", "cases": N}

The case store is immutable after startup; handlers are pure, so identical
requests yield identical responses and concurrent batches are safe. Item
order in a response always mirrors the request.

Env var CIKIT_BIND overrides the bind address.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Mapping

from .cases import CaseStore
from .verifier import build_compliance_question, verify

__all__ = ["RewardService", "serve", "resolve_bind_address"]

BIND_ENV_VAR = "CIKIT_BIND"
DEFAULT_BIND = "127.0.0.1:8420"


def resolve_bind_address(flag_value: str | None = None) -> tuple[str, int]:
    """Bind address precedence: CIKIT_BIND env var, then the flag, then default."""
    raw = os.environ.get(BIND_ENV_VAR) or flag_value or DEFAULT_BIND
    host, _, port_text = raw.rpartition(":")
    if not host or not port_text.isdigit():
        raise ValueError(f"bad bind address {raw!r}; expected host:port")
    return host, int(port_text)


def _reward_items(store: CaseStore, items: list[Mapping], strict: bool) -> tuple[list[dict], dict]:
    out = []
    failures = 0
    total = 0.0
    for item in items:
        case_id = str(item.get("case_id", ""))
        response_text = str(item.get("response_text", ""))
        if case_id not in store:
            out.append({
                "case_id": case_id,
                "reward": 0.0,
                "format_ok": False,
                "parsed_choice": None,
                "errors": ["unknown case"],
            })
            failures += 1
            continue
        case = store.get(case_id)
        question = build_compliance_question(case)
        report = verify(response_text, question, strict_ci=strict, annotation=case.annotation)
        out.append({
            "case_id": case_id,
            "reward": report.reward,
            "format_ok": report.format_ok,
            "parsed_choice": report.choice.letter if report.choice else None,
            "errors": report.error_strings(),
        })
        total += report.reward
        if not report.format_ok:
            failures += 1
    summary = {
        "mean_reward": (total / len(out)) if out else None,
        "format_failures": failures,
    }
    return out, summary


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "cikit-reward"

    # set by serve()
    store: CaseStore
    expose_gold: bool

    def log_message(self, fmt: str, *args) -> None:  # silence per-request noise
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:  # noqa: N802 (http.server API)
        path, _, query = self.path.partition("?")
        if path == "/v1/health":
            self._send_json(200, {"status": "ok", "cases": len(self.store)})
            return
        if path.startswith("/v1/cases/"):
            case_id = path[len("/v1/cases/"):]
            if case_id not in self.store:
                self._send_json(404, {"error": "unknown case"})
                return
            case = self.store.get(case_id)
            payload = {
                "id": case.id,
                "domain": case.domain.value,
                "narrative": case.narrative,
                "annotation": case.annotation.to_json(),
                "cited_paths": [list(p) for p in case.cited_paths],
            }
            include_gold = "include_gold=true" in query.split("&")
            if include_gold and self.expose_gold:
                payload["gold"] = case.gold.value
            self._send_json(200, payload)
            return
        self._send_json(404, {"error": "not found"})

    def do_POST(self) -> None:  # noqa: N802
        if self.path.partition("?")[0] != "/v1/reward":
            self._send_json(404, {"error": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            request = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, json.JSONDecodeError):
            self._send_json(400, {"error": "invalid JSON body"})
            return
        items = request.get("items")
        mode = request.get("mode", "lenient")
        if not isinstance(items, list) or mode not in ("strict", "lenient"):
            self._send_json(400, {"error": 'body must carry "items" list and mode strict|lenient'})
            return
        reward_items, summary = _reward_items(self.store, items, strict=(mode == "strict"))
        self._send_json(200, {"items": reward_items, "summary": summary})


@dataclass
class RewardService:
    """A running service; use as a context manager or call shutdown()."""

    server: ThreadingHTTPServer
    thread: threading.Thread

    @property
    def host(self) -> str:
        return self.server.server_address[0]

    @property
    def port(self) -> int:
        return self.server.server_address[1]

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def shutdown(self) -> None:
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5)

    def __enter__(self) -> "RewardService":
        return self

    def __exit__(self, *exc_info) -> None:
        self.shutdown()


def serve(
    store: CaseStore,
    bind_address: str | None = None,
    *,
    expose_gold: bool = False,
) -> RewardService:
    """Start the service on a daemon thread; port 0 picks a free port."""
    host, port = resolve_bind_address(bind_address)
    handler = type("BoundHandler", (_Handler,), {"store": store, "expose_gold": expose_gold})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    thread = threading.Thread(target=server.serve_forever, name="cikit-reward-service", daemon=True)
    thread.start()
    return RewardService(server=server, thread=thread)

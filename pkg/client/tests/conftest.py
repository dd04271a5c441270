from __future__ import annotations

import json
import subprocess
import sys
import threading
import time
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import pytest
import requests

REPO_ROOT = Path(__file__).parent.parent.parent
CASES_FILE = REPO_ROOT / "data" / "cases_demo.json"
RESPONSE_FILE = REPO_ROOT / "tests" / "fixtures" / "real_estate_response.txt"


@pytest.fixture(scope="session")
def real_estate_text() -> str:
    return RESPONSE_FILE.read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def service_url():
    """A real service process, launched through the CLI and reached over HTTP."""
    process = subprocess.Popen(
        [sys.executable, "-m", "cikit.cli", "serve",
         "--cases", str(CASES_FILE), "--bind", "127.0.0.1:0"],
        stderr=subprocess.PIPE,
        text=True,
    )
    try:
        line = process.stderr.readline()
        url = line.strip().rsplit(" ", 1)[-1]
        assert url.startswith("http://"), f"unexpected startup line: {line!r}"
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            try:
                requests.get(f"{url}/v1/health", timeout=1)
                break
            except requests.RequestException:
                time.sleep(0.05)
        yield url
    finally:
        process.terminate()
        process.wait(timeout=10)


class FlakyOnceHandler(BaseHTTPRequestHandler):
    """Fails the first POST with 503, answers canned rewards afterwards."""

    failures_left = 1
    requests_seen = 0

    def log_message(self, fmt, *args):
        pass

    def do_POST(self):
        cls = type(self)
        cls.requests_seen += 1
        length = int(self.headers.get("Content-Length", "0"))
        body = json.loads(self.rfile.read(length))
        if cls.failures_left > 0:
            cls.failures_left -= 1
            self.send_response(503)
            self.end_headers()
            return
        reply = json.dumps({
            "items": [
                {"case_id": item["case_id"], "reward": 1.0, "format_ok": True,
                 "parsed_choice": "A", "errors": []}
                for item in body["items"]
            ],
            "summary": {"mean_reward": 1.0, "format_failures": 0},
        }).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(reply)))
        self.end_headers()
        self.wfile.write(reply)


@pytest.fixture()
def flaky_server():
    handler = type("Handler", (FlakyOnceHandler,), {"failures_left": 1, "requests_seen": 0})
    server = HTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}", handler
    finally:
        server.shutdown()
        server.server_close()

"""Scripted JSON endpoints on a local ThreadingHTTPServer for backend tests."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class Stub:
    """``script[path]`` is a list of ``(status, body, delay_s)``; the last entry repeats."""

    def __init__(self):
        self.script: dict[str, list[tuple[int, object, float]]] = {}
        self.calls: dict[str, int] = {}
        self.requests: list[tuple[str, dict, dict]] = []
        self._lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(length) or b"{}")
                with stub._lock:
                    n = stub.calls.get(self.path, 0)
                    stub.calls[self.path] = n + 1
                    stub.requests.append((self.path, payload, dict(self.headers)))
                    steps = stub.script.get(self.path, [(404, {"error": "no route"}, 0.0)])
                    status, body, delay = steps[min(n, len(steps) - 1)]
                if callable(body):
                    body = body(payload)
                if delay:
                    time.sleep(delay)
                blob = body if isinstance(body, bytes) else json.dumps(body).encode()
                try:
                    self.send_response(status)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(blob)))
                    self.end_headers()
                    self.wfile.write(blob)
                except (BrokenPipeError, ConnectionResetError):
                    pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.server.daemon_threads = True
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()

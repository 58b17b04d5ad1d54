"""HTTP interpolation service consumed by the explorer UI.

Endpoints:
  GET /space             parameter-space description (samples, simplices, modes)
  GET /frame?w=&t=&mode= one synthesized frame as PNG, weights in headers
  GET /health            liveness probe

Out-of-hull weights and bad frame indices yield 400 with a JSON body;
unknown paths 404. Requests are stateless apart from the volume window
cache; FLOF_THREADS caps how many render concurrently.
"""

import json
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from ..interpolation import OutsideHullError
from .runtime import SpaceRuntime, render_png

_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
}


def make_server(space_path, host="127.0.0.1", port=8040, ui_dir=None):
    runtime = SpaceRuntime(space_path)
    threads = int(os.environ.get("FLOF_THREADS", "0") or 0)
    gate = threading.BoundedSemaphore(threads) if threads > 0 else None
    ui_root = Path(ui_dir).resolve() if ui_dir else None

    class Handler(BaseHTTPRequestHandler):
        server_version = "flof"

        def log_message(self, fmt, *args):
            pass

        def _send(self, status, body, content_type="application/json", headers=None):
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Expose-Headers", "*")
            for key, value in (headers or {}).items():
                self.send_header(key, value)
            self.end_headers()
            self.wfile.write(body)

        def _send_json(self, status, payload, headers=None):
            self._send(status, json.dumps(payload).encode(), headers=headers)

        def do_GET(self):
            try:
                if gate is not None:
                    with gate:
                        self._route()
                else:
                    self._route()
            except BrokenPipeError:
                pass
            except Exception as exc:  # surface bugs as 500, not dropped sockets
                self._send_json(500, {"error": f"internal error: {exc}"})

        def _route(self):
            url = urlparse(self.path)
            if url.path == "/health":
                self._send_json(200, {"status": "ok"})
            elif url.path == "/space":
                self._send_json(200, runtime.describe())
            elif url.path == "/frame":
                self._frame(parse_qs(url.query))
            elif ui_root is not None:
                self._static(url.path)
            else:
                self._send_json(404, {"error": f"unknown path {url.path}"})

        def _frame(self, query):
            try:
                w = [float(p) for p in query.get("w", [""])[0].split(",") if p != ""]
                if not w:
                    raise ValueError("missing weights")
                t = float(query.get("t", ["0"])[0])
                mode = query.get("mode", ["linear"])[0]
                filter_time = query.get("filter", ["0"])[0] in ("1", "true")
                if mode not in runtime.modes:
                    raise ValueError(f"mode {mode!r} not available for this space")
                slab, report = runtime.synthesize(w, t, mode=mode, filter_time=filter_time)
            except (OutsideHullError, ValueError) as exc:
                self._send_json(400, {"error": str(exc)})
                return
            png = render_png(slab, runtime.kind, runtime.manifests[0].density_max)
            headers = {
                "X-Flof-Weights": json.dumps(report["weights"]),
                "X-Flof-Weight-Labels": json.dumps(report["labels"]),
                "X-Flof-Simplex": str(report["simplex"]),
                "X-Flof-Mode": report["mode"],
            }
            self._send(200, png, content_type="image/png", headers=headers)

        def _static(self, path):
            name = "index.html" if path in ("/", "") else path.lstrip("/")
            target = (ui_root / name).resolve()
            if not str(target).startswith(str(ui_root)) or not target.is_file():
                self._send_json(404, {"error": f"unknown path {path}"})
                return
            ctype = _STATIC_TYPES.get(target.suffix, "application/octet-stream")
            self._send(200, target.read_bytes(), content_type=ctype)

    server = ThreadingHTTPServer((host, port), Handler)
    server.flof_runtime = runtime
    return server


def serve(space_path, host="127.0.0.1", port=8040, ui_dir=None):
    server = make_server(space_path, host=host, port=port, ui_dir=ui_dir)
    print(
        json.dumps(
            {"serving": str(space_path), "host": host, "port": server.server_address[1]}
        ),
        flush=True,
    )
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()

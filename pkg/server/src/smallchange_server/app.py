"""HTTP server speaking the smallchange backend wire protocol.

Endpoints (JSON bodies, images as base64 PNG):

    POST /v1/change    {ref_png, image_png}            -> {prob_png}
    POST /v1/describe  {image_png, region_png, prompt} -> {text}
    POST /v1/segment   {image_png, label}              -> {proposals: [...]}
    GET  /v1/health                                    -> {status, endpoints}

Unknown fingerprints answer 404 with {"error": "fixture missing", "pair_id"};
undecodable payloads answer 400. Responses are pure functions of request
content, so request ordering and concurrency never change behavior.
"""

from __future__ import annotations

import argparse
import base64
import binascii
import json
import logging
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .adapters import Adapters
from .store import BadRequest, FixtureStore, LookupMiss, StoreError, digest_mask_png, digest_rgb_png

log = logging.getLogger("smallchange_server")

ENDPOINTS = ["/v1/change", "/v1/describe", "/v1/segment"]


def _b64_field(payload: dict, field: str) -> bytes:
    value = payload.get(field)
    if not isinstance(value, str):
        raise BadRequest(f"missing or non-string field: {field}")
    try:
        return base64.b64decode(value, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise BadRequest(f"field {field} is not valid base64: {exc}") from exc


class _Handler(BaseHTTPRequestHandler):
    server_version = "smallchange-server/0.1"
    store: FixtureStore = None  # injected by serve()
    adapters: Adapters = None

    # --- plumbing ------------------------------------------------------------

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, fmt, *args):
        log.debug("%s %s", self.address_string(), fmt % args)

    def _read_payload(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        try:
            payload = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise BadRequest(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise BadRequest("request body must be a JSON object")
        return payload

    # --- endpoints -------------------------------------------------------------

    def do_GET(self):
        if self.path == "/v1/health":
            self._send_json(200, {"status": "ok", "endpoints": ENDPOINTS})
        else:
            self._send_json(404, {"error": "unknown endpoint", "path": self.path})

    def do_POST(self):
        try:
            payload = self._read_payload()
            if self.path == "/v1/change":
                self._handle_change(payload)
            elif self.path == "/v1/describe":
                self._handle_describe(payload)
            elif self.path == "/v1/segment":
                self._handle_segment(payload)
            else:
                self._send_json(404, {"error": "unknown endpoint", "path": self.path})
        except BadRequest as exc:
            self._send_json(400, {"error": str(exc)})
        except LookupMiss as exc:
            self._send_json(404, {"error": str(exc), "pair_id": exc.pair_id})
        except Exception:  # pragma: no cover - defensive
            log.exception("unhandled error serving %s", self.path)
            self._send_json(500, {"error": "internal server error"})

    def _handle_change(self, payload: dict) -> None:
        ref_png = _b64_field(payload, "ref_png")
        live_png = _b64_field(payload, "image_png")
        if self.adapters.change is not None:
            prob_png = self.adapters.change.detect_change(ref_png, live_png)
        else:
            prob_png = self.store.change(digest_rgb_png(ref_png), digest_rgb_png(live_png))
        self._send_json(200, {"prob_png": base64.b64encode(prob_png).decode("ascii")})

    def _handle_describe(self, payload: dict) -> None:
        image_png = _b64_field(payload, "image_png")
        region_png = _b64_field(payload, "region_png")
        prompt = payload.get("prompt", "")
        if self.adapters.describe is not None:
            text = self.adapters.describe.describe(image_png, region_png, prompt)
        else:
            text = self.store.describe(digest_rgb_png(image_png), digest_mask_png(region_png))
        self._send_json(200, {"text": text})

    def _handle_segment(self, payload: dict) -> None:
        image_png = _b64_field(payload, "image_png")
        label = payload.get("label")
        if not isinstance(label, str) or not label.strip():
            raise BadRequest("missing or empty field: label")
        if self.adapters.segment is not None:
            hits = self.adapters.segment.segment(image_png, label)
            proposals = [
                {"label": label,
                 "mask_png": base64.b64encode(h["mask_png"]).decode("ascii"),
                 "confidence": h.get("confidence")}
                for h in hits
            ]
        else:
            proposals = [
                {"label": label,
                 "mask_png": base64.b64encode(entry["file_bytes"]).decode("ascii"),
                 "confidence": entry["confidence"]}
                for entry in self.store.segment(digest_rgb_png(image_png), label)
            ]
        self._send_json(200, {"proposals": proposals})


def serve(root, port: int, host: str = "127.0.0.1",
          adapters: Adapters | None = None) -> ThreadingHTTPServer:
    """Validate the fixture tree and return a bound, ready-to-run server.

    Raises :class:`StoreError` on a malformed tree and ``OSError`` when the
    port is taken. Call ``serve_forever()`` on the result (or use
    :func:`run`, which does and blocks).
    """
    store = FixtureStore(root)
    handler = type("BoundHandler", (_Handler,), {
        "store": store,
        "adapters": adapters or Adapters(),
    })
    return ThreadingHTTPServer((host, port), handler)


def run(root, port: int, host: str = "127.0.0.1") -> None:
    server = serve(root, port, host)
    bound_port = server.server_address[1]
    log.info("serving fixtures from %s on http://%s:%d", root, host, bound_port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()


def start_in_thread(root, port: int = 0, host: str = "127.0.0.1",
                    adapters: Adapters | None = None):
    """Convenience for tests: returns (server, thread); caller shuts down."""
    server = serve(root, port, host, adapters)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="smallchange-server",
        description="Serve recorded model responses over the smallchange wire protocol.",
    )
    parser.add_argument("--root", required=True, help="fixture tree directory (with index.json)")
    parser.add_argument("--port", type=int, default=8750, help="TCP port (default 8750)")
    parser.add_argument("--host", default="127.0.0.1", help="bind address (default 127.0.0.1)")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        run(args.root, args.port, args.host)
    except StoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""HTTP/JSON service exposing the pipeline to clients.

Images are content-addressed: the id of an upload is the SHA-256 of its
bytes, and the id of a derived (corrected) image is the SHA-256 of its
canonical float data, so repeating a request returns the same id.  The store
is an in-memory LRU shared across worker threads; everything it holds is
immutable once inserted.

Routes (JSON unless noted):
    POST /api/images            raw PNG / PPM / .npy body -> {id, width, height}
    GET  /api/images/{id}       metadata
    GET  /api/images/{id}.png   8-bit preview render (image/png)
    POST /api/estimate          {id, rect:{x,y,w,h}, method?} -> offset report
    POST /api/correct           {id, epsilon:[e1,e2,e3]} -> {id, source}
    POST /api/diagnose          {id, rects:[[x,y,w,h],...]} -> line report
    GET  /api/scatter?id=&x=&y=&w=&h=&stride= -> {points, total, stride}
    GET  /api/convert?id=&space=&channel=&histeq=&invert= (image/png)

Errors are {"error": code, "detail": text} with 400 for malformed requests,
404 for unknown ids, 413 for oversized uploads, 422 for domain failures.
"""

import hashlib
import json
import mimetypes
import os
import struct
import sys
import threading
from collections import OrderedDict
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional, Tuple
from urllib.parse import parse_qs, urlparse

import numpy as np

from . import colorspace, image, offset
from .errors import OrgbError, ParameterError

MAX_UPLOAD_BYTES = 64 * 1024 * 1024
MAX_SCATTER_POINTS = 20000
DEFAULT_MAX_IMAGES = 64


@dataclass(eq=False)
class StoredImage:
    id: str
    image: image.LinearImage
    source: Optional[str] = None


class SessionStore:
    """Thread-safe LRU of decoded images, keyed by content hash."""

    def __init__(self, max_images: int = DEFAULT_MAX_IMAGES):
        if max_images < 1:
            raise ParameterError("store capacity must be >= 1")
        self.max_images = max_images
        self._lock = threading.Lock()
        self._items: "OrderedDict[str, StoredImage]" = OrderedDict()
        # derived-image shortcut keyed by (source id, epsilon digest)
        self._corrections: dict = {}

    @staticmethod
    def content_id(raw: bytes) -> str:
        return hashlib.sha256(raw).hexdigest()

    @staticmethod
    def array_id(data: np.ndarray) -> str:
        h = hashlib.sha256()
        h.update(b"linear-rgb")
        h.update(struct.pack(">3Q", *data.shape))
        h.update(np.ascontiguousarray(data, dtype=np.float64).tobytes())
        return h.hexdigest()

    @staticmethod
    def epsilon_digest(values: np.ndarray) -> str:
        return hashlib.sha256(struct.pack(">3d", *values)).hexdigest()

    def put_upload(self, raw: bytes) -> StoredImage:
        img = image.decode_image_bytes(raw)
        return self._insert(StoredImage(self.content_id(raw), img))

    def put_derived(self, img: image.LinearImage, source: str) -> StoredImage:
        return self._insert(StoredImage(self.array_id(img.data), img, source))

    def cached_correction(self, source: str, digest: str) -> Optional[StoredImage]:
        with self._lock:
            derived_id = self._corrections.get((source, digest))
        return self.get(derived_id) if derived_id else None

    def remember_correction(self, source: str, digest: str, derived_id: str) -> None:
        with self._lock:
            self._corrections[(source, digest)] = derived_id
            while len(self._corrections) > 4 * self.max_images:
                self._corrections.pop(next(iter(self._corrections)))

    def _insert(self, item: StoredImage) -> StoredImage:
        with self._lock:
            if item.id in self._items:
                self._items.move_to_end(item.id)
                return self._items[item.id]
            self._items[item.id] = item
            while len(self._items) > self.max_images:
                self._items.popitem(last=False)
            return item

    def get(self, image_id: str) -> Optional[StoredImage]:
        with self._lock:
            item = self._items.get(image_id)
            if item is not None:
                self._items.move_to_end(image_id)
            return item

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)


def _parse_rect_doc(doc, width: int, height: int) -> image.RegionMask:
    if isinstance(doc, dict):
        vals = (doc.get("x"), doc.get("y"), doc.get("w"), doc.get("h"))
    else:
        vals = tuple(doc)
    if len(vals) != 4 or any(v is None for v in vals):
        raise ParameterError(f"rect must supply x, y, w, h; got {doc!r}")
    x, y, w, h = (int(v) for v in vals)
    return image.make_mask_rect(x, y, w, h, width, height)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "orgb"
    store: SessionStore
    static_root: Optional[str]

    # --- plumbing ---

    def log_message(self, fmt, *args):
        pass  # request logging is noise for a local tool

    def _send_bytes(self, status: int, body: bytes, ctype: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, doc: dict) -> None:
        body = (json.dumps(doc, sort_keys=True) + "\n").encode("utf-8")
        self._send_bytes(status, body, "application/json")

    def _send_error_doc(self, status: int, code: str, detail: str) -> None:
        self._send_json(status, {"error": code, "detail": detail})

    def _read_body(self) -> Optional[bytes]:
        length = self.headers.get("Content-Length")
        if length is None:
            self._send_error_doc(400, "bad-request", "Content-Length required")
            return None
        try:
            n = int(length)
        except ValueError:
            self._send_error_doc(400, "bad-request", "bad Content-Length")
            return None
        if n > MAX_UPLOAD_BYTES:
            self._send_error_doc(
                413, "too-large", f"body exceeds {MAX_UPLOAD_BYTES} bytes"
            )
            return None
        return self.rfile.read(n)

    def _read_json_body(self) -> Optional[dict]:
        raw = self._read_body()
        if raw is None:
            return None
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            self._send_error_doc(400, "bad-request", f"body is not JSON: {exc}")
            return None
        if not isinstance(doc, dict):
            self._send_error_doc(400, "bad-request", "body must be a JSON object")
            return None
        return doc

    def _get_image(self, image_id) -> Optional[StoredImage]:
        if not isinstance(image_id, str) or not image_id:
            self._send_error_doc(400, "bad-request", "missing image id")
            return None
        item = self.store.get(image_id)
        if item is None:
            self._send_error_doc(404, "not-found", f"no image {image_id}")
            return None
        return item

    # --- dispatch ---

    def do_POST(self):
        try:
            path = urlparse(self.path).path
            if path == "/api/images":
                self._post_image()
            elif path == "/api/estimate":
                self._post_estimate()
            elif path == "/api/correct":
                self._post_correct()
            elif path == "/api/diagnose":
                self._post_diagnose()
            else:
                self._send_error_doc(404, "not-found", f"no route {path}")
        except OrgbError as exc:
            self._send_error_doc(422, exc.code, exc.message)
        except BrokenPipeError:
            pass

    def do_GET(self):
        try:
            url = urlparse(self.path)
            path = url.path
            if path.startswith("/api/images/"):
                self._get_image_route(path[len("/api/images/") :])
            elif path == "/api/scatter":
                self._get_scatter(parse_qs(url.query))
            elif path == "/api/convert":
                self._get_convert(parse_qs(url.query))
            else:
                self._get_static(path)
        except OrgbError as exc:
            self._send_error_doc(422, exc.code, exc.message)
        except BrokenPipeError:
            pass

    # --- API routes ---

    def _post_image(self):
        raw = self._read_body()
        if raw is None:
            return
        item = self.store.put_upload(raw)
        self._send_json(
            201,
            {"id": item.id, "width": item.image.width, "height": item.image.height},
        )

    def _post_estimate(self):
        doc = self._read_json_body()
        if doc is None:
            return
        item = self._get_image(doc.get("id"))
        if item is None:
            return
        if "rect" not in doc:
            self._send_error_doc(400, "bad-request", "missing rect")
            return
        mask = _parse_rect_doc(doc["rect"], item.image.width, item.image.height)
        method = str(doc.get("method", "ols"))
        est = offset.estimate_epsilon(item.image, mask, method=method)
        out = offset.epsilon_to_json(est)
        out["id"] = item.id
        self._send_json(200, out)

    def _post_correct(self):
        doc = self._read_json_body()
        if doc is None:
            return
        item = self._get_image(doc.get("id"))
        if item is None:
            return
        eps_doc = doc.get("epsilon")
        if eps_doc is None:
            self._send_error_doc(400, "bad-request", "missing epsilon")
            return
        if isinstance(eps_doc, dict):
            est = offset.epsilon_from_json(eps_doc)
        else:
            est = offset.Epsilon.from_values(eps_doc)
        digest = self.store.epsilon_digest(est.values)
        derived = self.store.cached_correction(item.id, digest)
        if derived is None:
            corrected = offset.correct(item.image, est)
            derived = self.store.put_derived(corrected, item.id)
            self.store.remember_correction(item.id, digest, derived.id)
        self._send_json(200, {"id": derived.id, "source": item.id})

    def _post_diagnose(self):
        doc = self._read_json_body()
        if doc is None:
            return
        item = self._get_image(doc.get("id"))
        if item is None:
            return
        rects = doc.get("rects")
        if not isinstance(rects, list) or not rects:
            self._send_error_doc(400, "bad-request", "missing rects")
            return
        img = item.image
        lines = []
        entries = []
        for rect in rects:
            mask = _parse_rect_doc(rect, img.width, img.height)
            line = offset.fit_color_line(img, mask)
            lines.append(line)
            x, y, w, h = mask.rect
            entries.append(
                {
                    "rect": [x, y, w, h],
                    "centroid": line.centroid.tolist(),
                    "direction": line.direction.tolist(),
                    "rms_residual": line.rms_residual,
                    "n": line.n,
                    "origin_distance": offset.line_origin_distance(line),
                }
            )
        report = {"id": item.id, "lines": entries, "convergence": None}
        if len(lines) >= 2:
            try:
                conv = offset.estimate_convergence_point(lines)
                report["convergence"] = {
                    "point": conv.point.tolist(),
                    "rms_line_distance": conv.rms_line_distance,
                }
            except OrgbError as exc:
                report["convergence_error"] = exc.code
        self._send_json(200, report)

    def _get_image_route(self, tail: str):
        if tail.endswith(".png"):
            item = self._get_image(tail[: -len(".png")])
            if item is None:
                return
            self._send_bytes(200, image.encode_preview_png(item.image), "image/png")
            return
        item = self._get_image(tail)
        if item is None:
            return
        doc = {
            "id": item.id,
            "width": item.image.width,
            "height": item.image.height,
        }
        if item.source is not None:
            doc["source"] = item.source
        self._send_json(200, doc)

    def _get_scatter(self, q):
        item = self._get_image(q.get("id", [None])[0])
        if item is None:
            return
        img = item.image
        try:
            if "rect" in q:
                x, y, w, h = (int(v) for v in q["rect"][0].split(","))
            else:
                x = int(q.get("x", ["0"])[0])
                y = int(q.get("y", ["0"])[0])
                w = int(q.get("w", [str(img.width)])[0])
                h = int(q.get("h", [str(img.height)])[0])
            stride = int(q.get("stride", ["1"])[0])
        except ValueError:
            self._send_error_doc(400, "bad-request", "rect/stride must be integers")
            return
        if stride < 1:
            self._send_error_doc(400, "bad-request", "stride must be >= 1")
            return
        mask = image.make_mask_rect(x, y, w, h, img.width, img.height)
        pts = offset.masked_pixels(img, mask)[::stride]
        total = pts.shape[0]
        if total > MAX_SCATTER_POINTS:
            step = -(-total // MAX_SCATTER_POINTS)  # ceil division
            pts = pts[::step]
            stride *= step
        self._send_json(
            200,
            {
                "id": item.id,
                "points": [[float(a), float(b), float(c)] for a, b, c in pts],
                "total": total,
                "stride": stride,
            },
        )

    def _get_convert(self, q):
        item = self._get_image(q.get("id", [None])[0])
        if item is None:
            return
        space = q.get("space", [""])[0]
        channel = q.get("channel", [""])[0]
        cs = colorspace.convert(item.image, space)
        ch = colorspace.display_channel(cs, channel)
        if q.get("histeq", ["0"])[0] in ("1", "true"):
            ch = image.histogram_equalize(ch)
        if q.get("invert", ["0"])[0] in ("1", "true"):
            ch = image.invert(ch)
        from . import pngio

        q8 = np.floor(np.clip(ch.data, 0.0, 1.0) * 255 + 0.5).astype(np.uint8)
        self._send_bytes(200, pngio.write_png(q8), "image/png")

    # --- static files ---

    def _get_static(self, path: str):
        root = self.static_root
        if root is None:
            if path in ("/", "/index.html"):
                body = (
                    b"<!doctype html><title>orgb api</title>"
                    b"<h1>orgb api</h1><p>No UI bundle configured; "
                    b"restart with --root. API lives under /api/.</p>"
                )
                self._send_bytes(200, body, "text/html; charset=utf-8")
            else:
                self._send_error_doc(404, "not-found", f"no route {path}")
            return
        rel = path.lstrip("/") or "index.html"
        full = os.path.realpath(os.path.join(root, rel))
        if not full.startswith(os.path.realpath(root) + os.sep) and full != (
            os.path.realpath(root)
        ):
            self._send_error_doc(404, "not-found", "path escapes static root")
            return
        if os.path.isdir(full):
            full = os.path.join(full, "index.html")
        if not os.path.isfile(full):
            self._send_error_doc(404, "not-found", f"no file {path}")
            return
        ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
        with open(full, "rb") as fh:
            self._send_bytes(200, fh.read(), ctype)


def make_server(
    host: str = "127.0.0.1",
    port: int = 8321,
    root: Optional[str] = None,
    max_images: int = DEFAULT_MAX_IMAGES,
) -> Tuple[ThreadingHTTPServer, SessionStore]:
    """Build (but do not start) the threaded server.  Port 0 picks a free
    port; read it back from server.server_address."""
    store = SessionStore(max_images)
    handler = type(
        "BoundHandler", (_Handler,), {"store": store, "static_root": root}
    )
    httpd = ThreadingHTTPServer((host, port), handler)
    httpd.daemon_threads = True
    return httpd, store


def serve(
    host: str = "127.0.0.1",
    port: int = 8321,
    root: Optional[str] = None,
    max_images: int = DEFAULT_MAX_IMAGES,
) -> None:
    """Run until interrupted."""
    httpd, _ = make_server(host, port, root, max_images)
    actual = httpd.server_address[1]
    print(f"orgb service listening on http://{host}:{actual}/", file=sys.stderr)
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        print("shutting down", file=sys.stderr)
    finally:
        httpd.server_close()

"""Wire protocol for the four model roles, HTTP clients, and mock backends.

Every model the pipeline talks to (open-set detector, zero-shot classifier,
OCR, multimodal LLM) sits behind one JSON-over-HTTP protocol:

    POST /v1/detect    {image_b64, labels, text_threshold, box_threshold}
                       -> {detections: [{box, label, confidence}]}
    POST /v1/classify  {image_b64, candidates: [{name, prompt}]}
                       -> {scores: [{name, score}]}
    POST /v1/ocr       {image_b64}
                       -> {lines: [{text, box}]}
    POST /v1/generate  {image_b64, prompt}
                       -> {text, reported_token_limit}

Errors carry ``{error: {code, message}}``. Images cross the wire as base64
inside the JSON body (capped at 20 MB raw). Endpoint URLs are either real
``http(s)://`` bases, ``mock:<fixture-path>`` for a canned-response backend,
or ``mock:echo`` for a fixture-less deterministic stand-in.

Every response is validated against the JSON Schemas in
``comicpipe/protocol/`` plus role-specific domain rules before anything
crosses into domain types. Transport failures are retried; protocol
violations never are.
"""

from __future__ import annotations

import base64
import hashlib
import json
import threading
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import httpx
import jsonschema

from .errors import BackendUnavailableError, InvalidInputError, ProtocolError
from .geometry import BoundingBox, Detection
from .textflow import OcrLine, OcrResult

__all__ = [
    "ROLES",
    "MAX_IMAGE_BYTES",
    "ImagePayload",
    "BackendEndpoint",
    "DetectorClient",
    "ClassifierClient",
    "OcrClient",
    "MllmClient",
    "MockTransport",
    "HttpTransport",
    "open_backend",
    "canonical_request",
    "request_fingerprint",
    "load_schema",
    "validate_against",
]

ROLES = ("detector", "classifier", "ocr", "mllm")
MAX_IMAGE_BYTES = 20 * 1024 * 1024

@dataclass(frozen=True)
class ImagePayload:
    """Encoded image bytes plus the pixel dimensions the client knows about."""

    data: bytes
    width: int
    height: int
    image_id: str = ""

    def __post_init__(self) -> None:
        if len(self.data) == 0:
            raise InvalidInputError("empty image payload")
        if len(self.data) > MAX_IMAGE_BYTES:
            raise InvalidInputError(
                f"image payload is {len(self.data)} bytes; the wire protocol caps "
                f"images at {MAX_IMAGE_BYTES} bytes"
            )
        if self.width <= 0 or self.height <= 0:
            raise InvalidInputError(f"bad payload dimensions {self.width}x{self.height}")

    @property
    def b64(self) -> str:
        return base64.b64encode(self.data).decode("ascii")


@dataclass(frozen=True)
class BackendEndpoint:
    role: str
    url: str
    timeout_ms: int = 30000
    max_retries: int = 2
    bearer_token: str | None = None
    record_path: str | None = None

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise InvalidInputError(f"unknown backend role {self.role!r}")
        if not (self.url.startswith(("http://", "https://", "mock:"))):
            raise InvalidInputError(
                f"endpoint url must be http(s):// or mock:..., got {self.url!r}"
            )
        if self.timeout_ms <= 0:
            raise InvalidInputError(f"timeout_ms must be positive, got {self.timeout_ms}")
        if self.max_retries < 0:
            raise InvalidInputError(f"max_retries must be >= 0, got {self.max_retries}")


# --- request canonicalization -------------------------------------------------

def canonical_request(path: str, body: dict) -> str:
    """Stable canonical form of a request: sorted keys, image bytes by digest."""
    canon = dict(body)
    if "image_b64" in canon:
        raw = base64.b64decode(canon.pop("image_b64"))
        canon["image_sha256"] = hashlib.sha256(raw).hexdigest()
    return json.dumps(
        {"path": path, "body": canon},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )


def request_fingerprint(path: str, body: dict) -> str:
    return hashlib.sha256(canonical_request(path, body).encode("utf-8")).hexdigest()


# --- schema validation ---------------------------------------------------------

_validators: dict[str, jsonschema.protocols.Validator] = {}
_validators_lock = threading.Lock()


def load_schema(name: str) -> dict:
    text = resources.files("comicpipe").joinpath(f"protocol/{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def validate_against(name: str, payload) -> None:
    """Validate ``payload`` against the named protocol schema; ProtocolError on failure."""
    with _validators_lock:
        validator = _validators.get(name)
        if validator is None:
            validator = jsonschema.Draft202012Validator(load_schema(name))
            _validators[name] = validator
    errors = sorted(validator.iter_errors(payload), key=str)
    if errors:
        first = errors[0]
        raise ProtocolError(f"response violates {name} schema: {first.message}")


# --- transports -----------------------------------------------------------------

class HttpTransport:
    """JSON POST with retries on transport and HTTP errors, never on bad payloads."""

    def __init__(self, endpoint: BackendEndpoint, transport: httpx.BaseTransport | None = None):
        self.endpoint = endpoint
        headers = {}
        if endpoint.bearer_token:
            headers["Authorization"] = f"Bearer {endpoint.bearer_token}"
        self._client = httpx.Client(
            base_url=endpoint.url.rstrip("/"),
            timeout=endpoint.timeout_ms / 1000.0,
            headers=headers,
            transport=transport,
        )

    def post(self, path: str, body: dict) -> dict:
        last_error: str = ""
        for _attempt in range(self.endpoint.max_retries + 1):
            try:
                response = self._client.post(path, json=body)
            except httpx.HTTPError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                continue
            if response.status_code >= 400:
                last_error = f"HTTP {response.status_code}"
                try:
                    payload = response.json()
                    validate_against("error_response", payload)
                    err = payload["error"]
                    last_error = f"HTTP {response.status_code} {err['code']}: {err['message']}"
                except (ProtocolError, ValueError):
                    pass
                continue
            try:
                return response.json()
            except ValueError as exc:
                raise ProtocolError(
                    f"{self.endpoint.role} backend returned non-JSON body: {exc}"
                ) from exc
        raise BackendUnavailableError(
            f"{self.endpoint.role} backend at {self.endpoint.url} unavailable after "
            f"{self.endpoint.max_retries + 1} attempts ({last_error})"
        )


class MockTransport:
    """Deterministic backend replaying canned responses from a fixture file.

    The fixture maps request fingerprints (see :func:`request_fingerprint`)
    to response bodies. ``mock:echo`` skips the fixture and synthesizes a
    trivial protocol-valid response instead. Requests are recorded in memory
    and, when the endpoint carries ``record_path``, appended to that file as
    JSON lines for out-of-process assertions.
    """

    def __init__(self, endpoint: BackendEndpoint):
        self.endpoint = endpoint
        spec = endpoint.url[len("mock:"):]
        self.echo = spec == "echo"
        self.fixture: dict[str, dict] = {}
        if not self.echo:
            fixture_path = Path(spec)
            try:
                with open(fixture_path, encoding="utf-8") as fh:
                    self.fixture = json.load(fh)
            except (OSError, ValueError) as exc:
                raise BackendUnavailableError(
                    f"cannot load mock fixture {fixture_path}: {exc}"
                ) from exc
        self.requests: list[tuple[str, dict]] = []
        self._lock = threading.Lock()

    def _record(self, path: str, body: dict) -> None:
        with self._lock:
            self.requests.append((path, body))
            if self.endpoint.record_path:
                line = canonical_request(path, body)
                with open(self.endpoint.record_path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")

    def post(self, path: str, body: dict) -> dict:
        self._record(path, body)
        if self.echo:
            return self._echo_response(path, body)
        fingerprint = request_fingerprint(path, body)
        try:
            return self.fixture[fingerprint]
        except KeyError:
            raise BackendUnavailableError(
                f"mock fixture has no entry for {path} request {fingerprint} "
                f"({canonical_request(path, body)[:200]}...)"
            ) from None

    @staticmethod
    def _echo_response(path: str, body: dict) -> dict:
        if path == "/v1/detect":
            return {"detections": []}
        if path == "/v1/classify":
            n = len(body["candidates"])
            score = round(1.0 / n, 6)
            return {"scores": [{"name": c["name"], "score": score} for c in body["candidates"]]}
        if path == "/v1/ocr":
            return {"lines": []}
        if path == "/v1/generate":
            return {"text": "DESC:" + body["prompt"][:20], "reported_token_limit": None}
        raise ProtocolError(f"echo mock has no handler for {path}")


# --- role clients ----------------------------------------------------------------

def _parse_box(coords, width: float | None = None, height: float | None = None) -> BoundingBox:
    try:
        box = BoundingBox.from_list(coords)
    except InvalidInputError as exc:
        raise ProtocolError(f"backend returned invalid box {coords}: {exc}") from exc
    if width is not None and (box.x_max > width or box.y_max > height):
        raise ProtocolError(
            f"backend box {coords} exceeds image bounds {width}x{height}"
        )
    return box


class _RoleClient:
    def __init__(self, endpoint: BackendEndpoint, transport=None):
        self.endpoint = endpoint
        if transport is not None:
            self.transport = transport
        elif endpoint.url.startswith("mock:"):
            self.transport = MockTransport(endpoint)
        else:
            self.transport = HttpTransport(endpoint)


class DetectorClient(_RoleClient):
    def detect(
        self,
        image: ImagePayload,
        labels: list[str],
        text_threshold: float,
        box_threshold: float,
    ) -> list[Detection]:
        if not labels:
            raise InvalidInputError("detect requires at least one label")
        body = {
            "image_b64": image.b64,
            "labels": list(labels),
            "text_threshold": float(text_threshold),
            "box_threshold": float(box_threshold),
        }
        payload = self.transport.post("/v1/detect", body)
        validate_against("detect_response", payload)
        detections = []
        for item in payload["detections"]:
            box = _parse_box(item["box"], image.width, image.height)
            if item["label"] not in labels:
                raise ProtocolError(
                    f"backend returned label {item['label']!r} outside requested {labels}"
                )
            detections.append(Detection(box=box, label=item["label"], confidence=item["confidence"]))
        return detections


class ClassifierClient(_RoleClient):
    def classify(
        self, crop: ImagePayload, candidates: list[tuple[str, str]]
    ) -> list[tuple[str, float]]:
        if not candidates:
            raise InvalidInputError("classify requires at least one candidate")
        body = {
            "image_b64": crop.b64,
            "candidates": [{"name": n, "prompt": p} for n, p in candidates],
        }
        payload = self.transport.post("/v1/classify", body)
        validate_against("classify_response", payload)
        scores = {item["name"]: item["score"] for item in payload["scores"]}
        expected = [n for n, _ in candidates]
        if sorted(scores) != sorted(expected) or len(payload["scores"]) != len(expected):
            raise ProtocolError(
                f"backend scores cover {sorted(scores)}, expected exactly {sorted(expected)}"
            )
        return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))


class OcrClient(_RoleClient):
    def ocr(self, crop: ImagePayload) -> OcrResult:
        payload = self.transport.post("/v1/ocr", {"image_b64": crop.b64})
        validate_against("ocr_response", payload)
        lines = [
            OcrLine(text=item["text"], box=_parse_box(item["box"]))
            for item in payload["lines"]
        ]
        lines.sort(key=lambda l: (l.box.y_min, l.box.x_min))
        return OcrResult(
            box=BoundingBox(0.0, 0.0, float(crop.width), float(crop.height)),
            lines=lines,
        )


class MllmClient(_RoleClient):
    def __init__(self, endpoint: BackendEndpoint, transport=None):
        super().__init__(endpoint, transport)
        self.reported_token_limit: int | None = None

    def generate(self, image: ImagePayload, prompt: str) -> tuple[str, int | None]:
        if not prompt:
            raise InvalidInputError("generate requires a non-empty prompt")
        payload = self.transport.post(
            "/v1/generate", {"image_b64": image.b64, "prompt": prompt}
        )
        validate_against("generate_response", payload)
        limit = payload.get("reported_token_limit")
        if limit is not None:
            self.reported_token_limit = limit
        return payload["text"], limit


_ROLE_CLIENTS = {
    "detector": DetectorClient,
    "classifier": ClassifierClient,
    "ocr": OcrClient,
    "mllm": MllmClient,
}


def open_backend(endpoint: BackendEndpoint):
    """Build the role-appropriate client for an endpoint."""
    return _ROLE_CLIENTS[endpoint.role](endpoint)

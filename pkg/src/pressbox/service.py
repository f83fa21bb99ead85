"""Client for the external scorer/rewriter service.

Wire protocol: newline-delimited JSON, one request per line, one response
per line, in order per connection.

    request  {"op": ..., "id": ..., "payload": {...}}
    response {"id": ..., "values": [...]}  or  {"id": ..., "error": {"code", "message"}}

Ops and payloads: ``semantic_similarity`` {"pairs": [[a, b], ...]},
``perplexity`` {"texts": [...]}, ``importance`` {"windows": [...]},
``rewrite`` {"sources": [...]}.

Endpoints: ``host:port`` for TCP, or ``exec:<command line>`` to spawn the
service as a subprocess and talk over its standard streams.
"""

from __future__ import annotations

import json
import shlex
import socket
import subprocess
from typing import Sequence

from .errors import ProtocolError, ServiceUnavailable


class _TcpTransport:
    def __init__(self, host: str, port: int, timeout: float = 10.0):
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ServiceUnavailable(f"cannot connect to {host}:{port}: {exc}") from exc
        self._reader = self._sock.makefile("r", encoding="utf-8", newline="\n")
        self._writer = self._sock.makefile("w", encoding="utf-8", newline="\n")

    def round_trip(self, line: str) -> str:
        try:
            self._writer.write(line + "\n")
            self._writer.flush()
            reply = self._reader.readline()
        except OSError as exc:
            raise ServiceUnavailable(f"connection lost: {exc}") from exc
        if not reply:
            raise ServiceUnavailable("service closed the connection")
        return reply

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class _StdioTransport:
    def __init__(self, command: Sequence[str]):
        try:
            self._proc = subprocess.Popen(
                list(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise ServiceUnavailable(f"cannot spawn {command!r}: {exc}") from exc

    def round_trip(self, line: str) -> str:
        if self._proc.poll() is not None:
            raise ServiceUnavailable("service process exited")
        try:
            assert self._proc.stdin and self._proc.stdout
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
            reply = self._proc.stdout.readline()
        except OSError as exc:
            raise ServiceUnavailable(f"service pipe broken: {exc}") from exc
        if not reply:
            raise ServiceUnavailable("service closed its output")
        return reply

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()


class ServiceClient:
    """Synchronous, in-order client; safe for one thread per instance."""

    def __init__(self, transport):
        self._transport = transport
        self._next_id = 0

    @classmethod
    def connect(cls, endpoint: str, timeout: float = 10.0) -> "ServiceClient":
        if endpoint.startswith("exec:"):
            return cls(_StdioTransport(shlex.split(endpoint[len("exec:"):])))
        host, sep, port = endpoint.rpartition(":")
        if not sep or not port.isdigit():
            raise ValueError(f"endpoint must be host:port or exec:<command>, got {endpoint!r}")
        return cls(_TcpTransport(host or "127.0.0.1", int(port), timeout=timeout))

    def request(self, op: str, payload: dict) -> list:
        request_id = f"req-{self._next_id}"
        self._next_id += 1
        line = json.dumps(
            {"op": op, "id": request_id, "payload": payload}, ensure_ascii=False
        )
        reply = self._transport.round_trip(line)
        try:
            obj = json.loads(reply)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"unparseable response: {reply!r}") from exc
        if not isinstance(obj, dict):
            raise ProtocolError(f"response must be an object, got {reply!r}")
        if obj.get("id") != request_id:
            raise ProtocolError(f"response id {obj.get('id')!r} != request id {request_id!r}")
        if "error" in obj:
            err = obj["error"] or {}
            raise ProtocolError(f"{err.get('code', 'error')}: {err.get('message', '')}")
        values = obj.get("values")
        if not isinstance(values, list):
            raise ProtocolError("response missing 'values' array")
        return values

    def close(self) -> None:
        self._transport.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class RemoteSemanticScorer:
    """SemanticScorer backed by the service's semantic_similarity op."""

    def __init__(self, client: ServiceClient):
        self._client = client

    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        if not pairs:
            return []
        values = self._client.request(
            "semantic_similarity", {"pairs": [[a, b] for a, b in pairs]}
        )
        if len(values) != len(pairs):
            raise ProtocolError(f"expected {len(pairs)} values, got {len(values)}")
        return [min(max(float(v), 0.0), 1.0) for v in values]


class RemoteFluencyScorer:
    """FluencyScorer backed by the service's perplexity op."""

    def __init__(self, client: ServiceClient):
        self._client = client

    def perplexity(self, text: str) -> float:
        values = self._client.request("perplexity", {"texts": [text]})
        if len(values) != 1:
            raise ProtocolError(f"expected 1 value, got {len(values)}")
        ppl = float(values[0])
        if not ppl > 0:
            raise ProtocolError(f"perplexity must be > 0, got {ppl}")
        return ppl


def remote_importance(windows: Sequence[str], client: ServiceClient) -> list[float]:
    """Importance scores for serialized context windows via the service."""
    if not windows:
        return []
    values = client.request("importance", {"windows": list(windows)})
    if len(values) != len(windows):
        raise ProtocolError(f"expected {len(windows)} values, got {len(values)}")
    return [float(v) for v in values]

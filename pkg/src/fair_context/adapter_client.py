"""Client for external in-context predictors spoken to over stdio.

Wire protocol: newline-delimited JSON objects, UTF-8, one per line, numbers
as IEEE-754 doubles.

  client -> {"type": "hello", "version": 1}
  adapter -> {"type": "ready", "model": "<name>", "max_context": <int|null>}
  client -> {"type": "predict", "id": N, "context_x": [[..]],
             "context_y": [..], "query_x": [[..]]}
  adapter -> {"type": "proba", "id": N, "p1": [..]}      (len == len(query_x))
          |  {"type": "error", "id": N, "message": "..."}
  client -> {"type": "bye"}

One request is in flight per adapter process at a time; parallel callers
multiplex over a pool of processes.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading

import numpy as np

from .errors import AdapterError, AdapterTimeout, AdapterUnavailable, EmptyContext, ProtocolError

PROTOCOL_VERSION = 1
DEFAULT_QUERY_CHUNK = 1024
DEFAULT_TIMEOUT_S = 120.0


class AdapterClient:
    """Owns one adapter subprocess and serializes requests to it."""

    def __init__(self, command: str | list[str], timeout_s: float = DEFAULT_TIMEOUT_S):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, encoding="utf-8", bufsize=1)
        except OSError as exc:
            raise AdapterUnavailable(f"could not launch adapter {argv!r}: {exc}") from exc
        self._lock = threading.Lock()
        self._timeout = timeout_s
        self._next_id = 0
        self.model_name = None
        self.max_context = None
        self._handshake()

    def _send(self, obj: dict):
        try:
            self._proc.stdin.write(json.dumps(obj) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise AdapterUnavailable(f"adapter process is gone: {exc}") from exc

    def _read_line(self) -> str:
        result: queue.Queue = queue.Queue()

        def reader():
            result.put(self._proc.stdout.readline())

        t = threading.Thread(target=reader, daemon=True)
        t.start()
        try:
            line = result.get(timeout=self._timeout)
        except queue.Empty:
            self._proc.kill()
            raise AdapterTimeout(f"no reply within {self._timeout}s")
        if line == "":
            raise AdapterUnavailable("adapter closed its output stream")
        return line

    def _read_object(self) -> dict:
        line = self._read_line()
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(line, f"invalid JSON: {exc}")
        if not isinstance(obj, dict) or "type" not in obj:
            raise ProtocolError(line, "expected an object with a 'type' field")
        return obj

    def _handshake(self):
        self._send({"type": "hello", "version": PROTOCOL_VERSION})
        obj = self._read_object()
        if obj.get("type") != "ready":
            raise ProtocolError(json.dumps(obj), "expected a 'ready' reply to hello")
        self.model_name = obj.get("model")
        self.max_context = obj.get("max_context")

    def predict(self, context_x: np.ndarray, context_y: np.ndarray,
                query_x: np.ndarray) -> np.ndarray:
        with self._lock:
            req_id = self._next_id
            self._next_id += 1
            self._send({
                "type": "predict",
                "id": req_id,
                "context_x": np.asarray(context_x, dtype=np.float64).tolist(),
                "context_y": np.asarray(context_y, dtype=np.float64).tolist(),
                "query_x": np.asarray(query_x, dtype=np.float64).tolist(),
            })
            obj = self._read_object()
        if obj.get("type") == "error":
            raise AdapterError(str(obj.get("message", "unspecified adapter error")))
        if obj.get("type") != "proba":
            raise ProtocolError(json.dumps(obj), "expected a 'proba' reply")
        if obj.get("id") != req_id:
            raise ProtocolError(json.dumps(obj), f"reply id {obj.get('id')} != request id {req_id}")
        p1 = obj.get("p1")
        if not isinstance(p1, list) or len(p1) != len(query_x):
            got = len(p1) if isinstance(p1, list) else type(p1).__name__
            raise ProtocolError(json.dumps(obj),
                                f"p1 length mismatch: got {got}, expected {len(query_x)}")
        return np.asarray(p1, dtype=np.float64)

    def close(self):
        if self._proc.poll() is None:
            try:
                self._send({"type": "bye"})
            except AdapterUnavailable:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class ExternalPredictor:
    """InContextPredictor backed by a pool of adapter processes."""

    def __init__(self, command: str, pool_size: int = 1,
                 query_chunk: int = DEFAULT_QUERY_CHUNK,
                 timeout_s: float = DEFAULT_TIMEOUT_S):
        self._clients: queue.Queue = queue.Queue()
        self._all = []
        for _ in range(max(1, pool_size)):
            client = AdapterClient(command, timeout_s=timeout_s)
            self._clients.put(client)
            self._all.append(client)
        self._chunk = query_chunk

    def predict_proba(self, context_X, context_y, query_X) -> np.ndarray:
        if np.asarray(context_X).shape[0] == 0:
            raise EmptyContext("external predictor needs a non-empty context")
        client = self._clients.get()
        try:
            parts = []
            n = np.asarray(query_X).shape[0]
            for start in range(0, n, self._chunk):
                parts.append(client.predict(context_X, context_y,
                                            query_X[start:start + self._chunk]))
            return np.concatenate(parts) if parts else np.empty(0)
        finally:
            self._clients.put(client)

    def close(self):
        for client in self._all:
            client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

"""Serve loop for the newline-delimited JSON prediction protocol.

One line in, one line out, strictly in order; a session handles a single
request at a time. Malformed lines produce an error object with id null and
the session continues. Validation happens before the model sees anything:
context and query matrices must be rectangular and share a width, labels
must align with context rows, and contexts beyond the model's ceiling are
rejected with an error naming the limit (the caller is responsible for
capping).
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass

PROTOCOL_VERSION = 1


@dataclass
class AdapterSession:
    backend: object
    model_name: str
    max_context: int | None = None
    device: str | None = None


def _rectangular(matrix) -> bool:
    if not isinstance(matrix, list) or not all(isinstance(r, list) for r in matrix):
        return False
    if not matrix:
        return True
    width = len(matrix[0])
    return all(len(r) == width for r in matrix) and all(
        isinstance(v, (int, float)) and not isinstance(v, bool)
        for r in matrix for v in r)


def _validate_predict(msg, max_context):
    ctx = msg.get("context_x")
    ys = msg.get("context_y")
    query = msg.get("query_x")
    if not _rectangular(ctx) or not ctx:
        return "context_x must be a non-empty rectangular matrix"
    if not _rectangular(query):
        return "query_x must be a rectangular matrix"
    if not isinstance(ys, list) or len(ys) != len(ctx):
        return "context_y length must match context_x rows"
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in ys):
        return "context_y must be numeric"
    if query and len(query[0]) != len(ctx[0]):
        return "query_x width must match context_x"
    if max_context is not None and len(ctx) > max_context:
        return (f"context has {len(ctx)} rows but max_context is {max_context}; "
                f"cap before sending")
    return None


def handle_line(session: AdapterSession, line: str):
    """Map one input line to (reply object or None, keep_running)."""
    line = line.strip()
    if not line:
        return None, True
    try:
        msg = json.loads(line)
        if not isinstance(msg, dict):
            raise ValueError("not an object")
    except (json.JSONDecodeError, ValueError) as exc:
        return {"type": "error", "id": None, "message": f"malformed line: {exc}"}, True

    kind = msg.get("type")
    if kind == "hello":
        return {"type": "ready", "model": session.model_name,
                "max_context": session.max_context,
                "package_version": getattr(session.backend, "package_version", "unknown"),
                }, True
    if kind == "bye":
        return None, False
    if kind == "predict":
        req_id = msg.get("id")
        problem = _validate_predict(msg, session.max_context)
        if problem:
            return {"type": "error", "id": req_id, "message": problem}, True
        context_y = msg["context_y"]
        query_x = msg["query_x"]
        distinct = set(context_y)
        try:
            if len(distinct) == 1:
                # degenerate single-class context: every label equals that class
                p1 = [float(next(iter(distinct)))] * len(query_x)
            else:
                p1 = session.backend.predict_p1(msg["context_x"], context_y, query_x)
        except Exception as exc:   # model failure must not kill the session
            return {"type": "error", "id": req_id, "message": f"model error: {exc}"}, True
        return {"type": "proba", "id": req_id, "p1": p1}, True
    return {"type": "error", "id": msg.get("id"),
            "message": f"unknown message type {kind!r}"}, True


def serve(session: AdapterSession, instream=None, outstream=None) -> int:
    """Run until a bye message or EOF; returns 0."""
    instream = instream if instream is not None else sys.stdin
    outstream = outstream if outstream is not None else sys.stdout
    for line in instream:
        reply, keep_running = handle_line(session, line)
        if reply is not None:
            outstream.write(json.dumps(reply) + "\n")
            outstream.flush()
        if not keep_running:
            break
    return 0

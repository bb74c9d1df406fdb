"""Contract tests for the adapter client against the stub adapter process."""

import sys
from pathlib import Path

import numpy as np
import pytest

from fair_context.adapter_client import AdapterClient, ExternalPredictor
from fair_context.errors import AdapterError, AdapterUnavailable, ProtocolError

STUB = f"{sys.executable} {Path(__file__).parent / 'stub_adapter.py'}"


@pytest.fixture
def client():
    with AdapterClient(STUB) as c:
        yield c


def test_handshake(client):
    assert client.model_name == "stub"
    assert client.max_context is None


def test_echo_contract(client):
    ctx = np.array([[0.0], [1.0], [2.0]])
    y = np.array([1.0, 0.0, 1.0])
    p = client.predict(ctx, y, np.array([[5.0], [6.0]]))
    np.testing.assert_allclose(p, [2 / 3, 2 / 3])


def test_byte_determinism_across_runs():
    runs = []
    for _ in range(2):
        with AdapterClient(STUB) as c:
            runs.append(c.predict(np.array([[1.0], [2.0]]), np.array([1.0, 0.0]),
                                  np.array([[3.0]])).tobytes())
    assert runs[0] == runs[1]


def test_malformed_line_is_protocol_error(client):
    with pytest.raises(ProtocolError):
        client.predict(np.array([[1.0]]), np.array([1.0]), np.array([[-888.0]]))


def test_wrong_length_is_protocol_error(client):
    with pytest.raises(ProtocolError) as info:
        client.predict(np.array([[1.0]]), np.array([1.0]),
                       np.array([[-999.0], [0.0]]))
    assert "length" in str(info.value)


def test_adapter_error_passthrough(client):
    with pytest.raises(AdapterError, match="synthetic failure"):
        client.predict(np.array([[1.0]]), np.array([1.0]), np.array([[-777.0]]))


def test_unavailable_command():
    with pytest.raises(AdapterUnavailable):
        AdapterClient("/nonexistent/adapter-binary")


def test_external_predictor_chunks_queries():
    with ExternalPredictor(STUB, pool_size=2, query_chunk=3) as pred:
        ctx = np.array([[0.0], [1.0]])
        y = np.array([1.0, 1.0])
        p = pred.predict_proba(ctx, y, np.zeros((10, 1)))
    assert p.shape == (10,)
    assert np.all(p == 1.0)


def test_external_predictor_empty_context():
    from fair_context.errors import EmptyContext

    with ExternalPredictor(STUB) as pred:
        with pytest.raises(EmptyContext):
            pred.predict_proba(np.zeros((0, 1)), np.zeros(0), np.zeros((2, 1)))

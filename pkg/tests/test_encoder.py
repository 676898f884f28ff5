"""Encoder gateway: mock construction, cache, batch, remote protocol."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from meshsearch import (
    EncoderConfig,
    EncoderGateway,
    EncoderProtocolError,
    EncoderUnavailableError,
    InputTooLargeError,
    RawInput,
    mock_embedding,
)
from meshsearch.encoder import ENV_ENDPOINT, ENV_MODE, payload_hash

# Frozen expected output of the documented mock construction
# (BLAKE2b-64 of payload + seed -> PCG64 -> 8 standard normals -> normalize).
# Regenerating these means the construction changed, which breaks stored
# queries; treat any diff here as a contract break.
GOLDEN_PAYLOAD = "golden pin"
GOLDEN_SEED = 7
GOLDEN_HASH = 15034056292245941886
GOLDEN_VECTOR = [
    0.2382233887910843,
    0.1083718091249466,
    0.3273695707321167,
    0.32880523800849915,
    0.3101910948753357,
    0.12891888618469238,
    0.628862202167511,
    -0.4559772312641144,
]


class TestRawInput:
    def test_text_ok(self):
        raw = RawInput("text", "a tall chair")
        assert raw.payload_bytes() == b"a tall chair"

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            RawInput("text", "")

    def test_text_bytes_rejected(self):
        with pytest.raises(ValueError):
            RawInput("text", b"bytes")

    def test_image_needs_bytes(self):
        with pytest.raises(ValueError):
            RawInput("image", "not bytes")

    def test_sketch_bytes_ok(self):
        raw = RawInput("sketch", b"\x89PNG...", media_type="image/png")
        assert raw.payload_bytes() == b"\x89PNG..."

    def test_unknown_modality(self):
        with pytest.raises(ValueError):
            RawInput("audio", "hum")


class TestConfig:
    def test_defaults(self):
        cfg = EncoderConfig()
        assert cfg.mode == "mock"
        assert cfg.dimension == 512

    def test_remote_requires_endpoint(self):
        with pytest.raises(ValueError):
            EncoderConfig(mode="remote")

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            EncoderConfig(mode="quantum")

    def test_env_overrides_defaults(self, monkeypatch):
        monkeypatch.setenv(ENV_MODE, "remote")
        monkeypatch.setenv(ENV_ENDPOINT, "http://127.0.0.1:1/encode")
        cfg = EncoderConfig.from_env()
        assert cfg.mode == "remote"
        assert cfg.endpoint == "http://127.0.0.1:1/encode"

    def test_explicit_kwargs_beat_env(self, monkeypatch):
        monkeypatch.setenv(ENV_MODE, "remote")
        monkeypatch.setenv(ENV_ENDPOINT, "http://127.0.0.1:1/encode")
        cfg = EncoderConfig.from_env(mode="mock")
        assert cfg.mode == "mock"


class TestMock:
    def test_deterministic(self):
        gw = EncoderGateway(EncoderConfig(dimension=32))
        a = gw.encode(RawInput("text", "a tall chair"))
        b = mock_embedding("a tall chair", seed=0, dimension=32)
        assert np.array_equal(a.values, b.values)

    def test_distinct_payloads_differ(self):
        a = mock_embedding("a tall chair", 0, 32)
        b = mock_embedding("a short chair", 0, 32)
        assert not np.array_equal(a.values, b.values)

    def test_distinct_seeds_differ(self):
        a = mock_embedding("a tall chair", 0, 32)
        b = mock_embedding("a tall chair", 1, 32)
        assert not np.array_equal(a.values, b.values)

    def test_norms_unit_for_100_random_payloads(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            payload = bytes(rng.integers(0, 256, size=20, dtype=np.uint8))
            emb = mock_embedding(payload, 3, 24)
            norm = float(np.linalg.norm(emb.values.astype(np.float64)))
            assert abs(norm - 1.0) <= 1e-5

    def test_golden_pin(self):
        assert payload_hash(GOLDEN_PAYLOAD) == GOLDEN_HASH
        emb = mock_embedding(GOLDEN_PAYLOAD, GOLDEN_SEED, 8)
        assert [float(x) for x in emb.values] == GOLDEN_VECTOR


class TestCache:
    def test_repeat_encode_hits_cache(self):
        gw = EncoderGateway(EncoderConfig(dimension=16))
        gw.encode(RawInput("text", "x"))
        gw.encode(RawInput("text", "x"))
        assert gw.stats() == {"encode_calls": 1, "cache_hits": 1, "cache_entries": 1}

    def test_same_payload_different_modality_is_distinct(self):
        gw = EncoderGateway(EncoderConfig(dimension=16))
        gw.encode(RawInput("image", b"pixels"))
        gw.encode(RawInput("sketch", b"pixels"))
        assert gw.stats()["encode_calls"] == 2

    def test_lru_eviction(self):
        gw = EncoderGateway(EncoderConfig(dimension=8, cache_size=2))
        gw.encode(RawInput("text", "a"))
        gw.encode(RawInput("text", "b"))
        gw.encode(RawInput("text", "c"))  # evicts "a"
        assert gw.stats()["cache_entries"] == 2
        gw.encode(RawInput("text", "a"))  # miss again
        assert gw.stats()["encode_calls"] == 4

    def test_weight_change_needs_no_encoding(self):
        # Re-running a query with new weights reuses cached embeddings:
        # encode the same payload set twice, second pass is all hits.
        gw = EncoderGateway(EncoderConfig(dimension=16))
        payloads = ["wooden chair", "metal legs", "low back"]
        for p in payloads:
            gw.encode(RawInput("text", p))
        before = gw.stats()["encode_calls"]
        for p in payloads:
            gw.encode(RawInput("text", p))
        assert gw.stats()["encode_calls"] == before

    def test_oversized_blob_rejected(self):
        gw = EncoderGateway(EncoderConfig(dimension=8, max_payload_bytes=10))
        with pytest.raises(InputTooLargeError):
            gw.encode(RawInput("image", b"x" * 11))


class TestBatch:
    def test_empty(self):
        gw = EncoderGateway(EncoderConfig(dimension=8))
        assert gw.encode_batch([]) == []

    def test_batch_equals_scalar_encodes(self):
        gw = EncoderGateway(EncoderConfig(dimension=8))
        inputs = [RawInput("text", t) for t in ("a", "b", "c")]
        batch = gw.encode_batch(inputs)
        for raw, emb in zip(inputs, batch):
            assert emb == EncoderGateway(EncoderConfig(dimension=8)).encode(raw)

    def test_failure_names_index(self):
        gw = EncoderGateway(EncoderConfig(dimension=8, max_payload_bytes=10))
        inputs = [
            RawInput("text", "fine"),
            RawInput("text", "also fine"),
            RawInput("image", b"x" * 900),
        ]
        with pytest.raises(InputTooLargeError) as excinfo:
            gw.encode_batch(inputs)
        assert excinfo.value.input_index == 2
        assert "batch input 2" in str(excinfo.value)


class _StubHandler(BaseHTTPRequestHandler):
    """Scripted encoder endpoint; behavior keyed off the request payload."""

    dimension = 8

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        payload = body.get("payload", "")
        if payload == "http 500":
            self.send_response(500)
            self.end_headers()
            return
        if payload == "not json":
            self._reply(b"this is not json")
            return
        if payload == "missing key":
            self._reply(json.dumps({"embedding": [1, 2]}).encode())
            return
        if payload == "wrong dimension":
            self._reply(json.dumps({"vector": [1.0] * (self.dimension - 1)}).encode())
            return
        if payload == "zero vector":
            self._reply(json.dumps({"vector": [0.0] * self.dimension}).encode())
            return
        if payload == "non finite":
            self._reply(
                json.dumps({"vector": ["NaN"] + [1.0] * (self.dimension - 1)}).encode()
            )
            return
        if payload == "slow":
            time.sleep(1.0)
        seed = sum(payload.encode()) if isinstance(payload, str) else 1
        rng = np.random.default_rng(seed)
        vec = rng.standard_normal(self.dimension) * 4.0  # unnormalized on purpose
        self._reply(json.dumps({"vector": vec.tolist()}).encode())

    def _reply(self, blob: bytes) -> None:
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(blob)))
        self.end_headers()
        self.wfile.write(blob)

    def log_message(self, *args):
        pass


@pytest.fixture(scope="module")
def stub_endpoint():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/encode"
    server.shutdown()
    thread.join(timeout=5)


def remote_gateway(endpoint: str, **kwargs) -> EncoderGateway:
    return EncoderGateway(
        EncoderConfig(mode="remote", endpoint=endpoint, dimension=8, **kwargs)
    )


class TestRemote:
    def test_good_reply_is_normalized(self, stub_endpoint):
        emb = remote_gateway(stub_endpoint).encode(RawInput("text", "hello"))
        norm = float(np.linalg.norm(emb.values.astype(np.float64)))
        assert abs(norm - 1.0) <= 1e-5

    def test_blob_payload_round_trips_as_base64(self, stub_endpoint):
        emb = remote_gateway(stub_endpoint).encode(RawInput("image", b"\x00\x01\xff"))
        assert emb.dimension == 8

    def test_http_error(self, stub_endpoint):
        with pytest.raises(EncoderProtocolError, match="500"):
            remote_gateway(stub_endpoint).encode(RawInput("text", "http 500"))

    def test_malformed_json(self, stub_endpoint):
        with pytest.raises(EncoderProtocolError):
            remote_gateway(stub_endpoint).encode(RawInput("text", "not json"))

    def test_missing_vector_key(self, stub_endpoint):
        with pytest.raises(EncoderProtocolError):
            remote_gateway(stub_endpoint).encode(RawInput("text", "missing key"))

    def test_wrong_dimension(self, stub_endpoint):
        with pytest.raises(EncoderProtocolError, match="expected"):
            remote_gateway(stub_endpoint).encode(RawInput("text", "wrong dimension"))

    def test_zero_vector(self, stub_endpoint):
        with pytest.raises(EncoderProtocolError, match="zero"):
            remote_gateway(stub_endpoint).encode(RawInput("text", "zero vector"))

    def test_non_finite(self, stub_endpoint):
        with pytest.raises(EncoderProtocolError, match="finite"):
            remote_gateway(stub_endpoint).encode(RawInput("text", "non finite"))

    def test_connection_refused(self):
        gw = remote_gateway("http://127.0.0.1:1/encode")
        with pytest.raises(EncoderUnavailableError):
            gw.encode(RawInput("text", "anything"))

    def test_timeout(self, stub_endpoint):
        gw = remote_gateway(stub_endpoint, timeout_ms=100)
        with pytest.raises(EncoderUnavailableError):
            gw.encode(RawInput("text", "slow"))

    def test_remote_replies_cached(self, stub_endpoint):
        gw = remote_gateway(stub_endpoint)
        a = gw.encode(RawInput("text", "hello"))
        b = gw.encode(RawInput("text", "hello"))
        assert a == b
        assert gw.stats() == {"encode_calls": 1, "cache_hits": 1, "cache_entries": 1}


class TestProbe:
    def test_mock_always_true(self):
        assert EncoderGateway(EncoderConfig(dimension=8)).probe() is True

    def test_remote_alive(self, stub_endpoint):
        assert remote_gateway(stub_endpoint).probe() is True

    def test_remote_dead(self):
        assert remote_gateway("http://127.0.0.1:1/encode").probe() is False

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from defconsensus import ProviderConfig, load_fixture
from defconsensus.embedding import local_deterministic_embed


@pytest.fixture(scope="session")
def individual_60():
    return load_fixture("individual-60.jsonl")


@pytest.fixture(scope="session")
def composite_20():
    return load_fixture("composite-20.jsonl")


@pytest.fixture(scope="session")
def baseline():
    return load_fixture("baseline.jsonl")


@pytest.fixture(scope="session")
def externals():
    return load_fixture("external-candidates.jsonl")


@pytest.fixture
def local_config():
    return ProviderConfig(kind="local_deterministic", dim=64)


@pytest.fixture(autouse=True)
def clear_embedding_cache():
    from defconsensus import embedding

    embedding._cache._store.clear()
    yield


class _FakeServiceHandler(BaseHTTPRequestHandler):
    """Configurable fake for the /embed and /chat wire contracts."""

    def do_POST(self):
        server = self.server
        server.requests.append(
            {
                "path": self.path,
                "headers": dict(self.headers),
                "body": json.loads(
                    self.rfile.read(int(self.headers["Content-Length"]))
                ),
            }
        )
        behavior = server.behaviors.pop(0) if server.behaviors else "ok"
        if behavior == "error":
            self.send_response(500)
            self.end_headers()
            return
        if behavior == "garbage":
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.end_headers()
            self.wfile.write(b"not json at all")
            return

        body = server.requests[-1]["body"]
        if self.path.endswith("/embed"):
            dim = server.dim
            embeddings = [
                list(local_deterministic_embed(t, dim).values)
                for t in body["texts"]
            ]
            if behavior == "short_vector":
                embeddings[0] = embeddings[0][:-1]
            payload = {"dim": dim, "embeddings": embeddings}
        else:  # /chat
            payload = {"content": server.chat_responses.pop(0)}
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def fake_service():
    server = HTTPServer(("127.0.0.1", 0), _FakeServiceHandler)
    server.requests = []
    server.behaviors = []
    server.chat_responses = []
    server.dim = 16
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    server.endpoint = f"http://127.0.0.1:{server.server_address[1]}"
    yield server
    server.shutdown()
    server.server_close()

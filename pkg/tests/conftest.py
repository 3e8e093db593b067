from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from convoscope.corpus import Corpus, SchemaMap, parse_records, resolve_retweets


def record(msg_id, author="u1", text="plain words here #tag", timestamp=None, retweeted=None):
    return {
        "id": msg_id,
        "author": author,
        "text": text,
        "timestamp": timestamp,
        "retweeted_id": retweeted,
    }


def build_corpus(records: list[dict], resolve: bool = True) -> Corpus:
    lines = [json.dumps(r) for r in records]
    corpus = parse_records(lines, SchemaMap.preset("default"))
    return resolve_retweets(corpus) if resolve else corpus


class _ChatHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length))
        server: ChatServer = self.server  # type: ignore[assignment]
        with server.lock:
            server.payloads.append(payload)
            fail_remaining = server.fail_next > 0
            if fail_remaining:
                server.fail_next -= 1
        if fail_remaining:
            self.send_response(503)
            self.end_headers()
            return
        reply = server.responder(payload)
        body = json.dumps({"choices": [{"message": {"content": reply}}]}).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


class ChatServer(ThreadingHTTPServer):
    """Local chat-completion endpoint with scriptable replies and failures."""

    def __init__(self):
        super().__init__(("127.0.0.1", 0), _ChatHandler)
        self.payloads: list[dict] = []
        self.fail_next = 0
        self.responder = lambda payload: "ok"
        self.lock = threading.Lock()

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.server_address[1]}/v1/chat/completions"


@pytest.fixture
def chat_server():
    server = ChatServer()
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()
    server.server_close()

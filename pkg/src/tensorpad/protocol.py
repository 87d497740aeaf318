"""Newline-delimited JSON protocol for frontends.

Each input message {"id": n, "kind": "input", "body": line} is answered by a
busy status, exactly one output or error carrying the plain echo and a TeX
render string, and an idle status.  The engine evaluates serially; a frontend
never parses expressions itself.
"""

from __future__ import annotations

import dataclasses
import json
import socketserver

from .session import ProtocolMessage, Session, SessionError


def handle_message(session: Session, raw: str):
    """Evaluate one frame; returns the reply messages as dicts, exactly one
    output or error per input id."""
    try:
        msg = json.loads(raw)
        mid = int(msg["id"])
        body = msg["body"]
        if msg.get("kind", "input") != "input" or not isinstance(body, str):
            raise ValueError("not an input frame")
    except (ValueError, KeyError, TypeError):
        return [dataclasses.asdict(ProtocolMessage(0, "error", "bad message"))]
    replies = [ProtocolMessage(mid, "status", "busy")]
    try:
        terminator = "." if body.rstrip().endswith(".") else ";"
        stripped = body.rstrip().rstrip(";.")
        if stripped.strip():
            plain, tex = session.eval_line_detail(stripped, terminator)
        else:
            plain, tex = "", ""
        replies.append(ProtocolMessage(mid, "output", plain, tex))
    except SessionError as err:
        replies.append(ProtocolMessage(mid, "error", str(err)))
    replies.append(ProtocolMessage(mid, "status", "idle"))
    return [dataclasses.asdict(r) for r in replies]


def serve_stream(session: Session, rfile, wfile):
    """Serve over a pair of text streams (stdio or a socket makefile)."""
    for raw in rfile:
        raw = raw.strip()
        if not raw:
            continue
        for reply in handle_message(session, raw):
            wfile.write(json.dumps(reply) + "\n")
        wfile.flush()


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        session = Session(default_rules=self.server.default_rules)
        rfile = self.rfile
        wfile = self.wfile
        for raw in rfile:
            raw = raw.decode("utf-8").strip()
            if not raw:
                continue
            for reply in handle_message(session, raw):
                wfile.write((json.dumps(reply) + "\n").encode("utf-8"))
            wfile.flush()


class ProtocolServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, host="127.0.0.1", port=0, default_rules=False):
        super().__init__((host, port), _Handler)
        self.default_rules = default_rules

    @property
    def port(self) -> int:
        return self.server_address[1]


def serve_tcp(host="127.0.0.1", port=0, default_rules=False,
              announce=None):
    """Run a TCP protocol server; one fresh session per connection."""
    server = ProtocolServer(host, port, default_rules)
    if announce:
        announce(server.port)
    try:
        server.serve_forever()
    finally:
        server.server_close()

"""Blocking request/reply session over the newline-delimited JSON protocol.

The environment speaks first: an ``init`` message with the episode metadata
and the first observation, then one ``feedback`` message after every decision.
A session is a thin codec plus a state machine that only lets the caller send
one decision per received message, so feedback k is always delivered before
action k+1 can go out.
"""

from __future__ import annotations

import json
import socket
import sys
from dataclasses import dataclass

SUPPORTED_PROTOCOL_VERSION = 1


class ProtocolError(Exception):
    """The environment sent something this SDK cannot speak."""


class SessionClosed(Exception):
    """The environment closed the connection (episode over)."""


@dataclass(frozen=True)
class Feedback:
    step: int
    outcome_text: str
    success: bool | None
    observation: dict | None
    caption: str


class Session:
    """One episode's connection to the environment."""

    def __init__(self, reader, writer):
        self._reader = reader
        self._writer = writer
        self._may_send = False
        self.episode_id: str = ""
        self.task: str = ""
        self.instruction: str = ""
        self.observation: dict | None = None
        self.caption: str = ""
        self._handshake()

    @classmethod
    def stdio(cls) -> "Session":
        """Session over this process's standard streams (the environment
        launched us as a subprocess)."""
        return cls(sys.stdin, sys.stdout)

    @classmethod
    def tcp_server(cls, port: int, host: str = "127.0.0.1") -> "Session":
        """Listen for one environment connection (the ``tcp:`` endpoint side
        connects to us)."""
        srv = socket.create_server((host, port))
        conn, _ = srv.accept()
        srv.close()
        stream = conn.makefile("rw", encoding="utf-8", newline="\n")
        return cls(stream, stream)

    # ------------------------------------------------------------------ #

    def _read_message(self) -> dict:
        line = self._reader.readline()
        if not line:
            raise SessionClosed("environment closed the stream")
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as e:
            raise ProtocolError(f"unreadable message: {e}") from None
        if not isinstance(msg, dict):
            raise ProtocolError("message is not an object")
        return msg

    def _write_message(self, msg: dict) -> None:
        self._writer.write(json.dumps(msg, separators=(",", ":")) + "\n")
        self._writer.flush()

    def _handshake(self) -> None:
        msg = self._read_message()
        if msg.get("type") != "init":
            raise ProtocolError(f"expected init, got {msg.get('type')!r}")
        version = msg.get("version")
        if version != SUPPORTED_PROTOCOL_VERSION:
            raise ProtocolError(
                f"protocol version {version!r} not supported (want {SUPPORTED_PROTOCOL_VERSION})"
            )
        self.episode_id = str(msg.get("episode_id", ""))
        self.task = str(msg.get("task", ""))
        self.instruction = str(msg.get("instruction", ""))
        self.observation = msg.get("observation")
        self.caption = str(msg.get("caption", ""))
        self._may_send = True

    def _await_feedback(self) -> Feedback:
        msg = self._read_message()
        if msg.get("type") != "feedback":
            raise ProtocolError(f"expected feedback, got {msg.get('type')!r}")
        self.observation = msg.get("observation")
        self.caption = str(msg.get("caption", ""))
        self._may_send = True
        return Feedback(
            step=int(msg.get("step", 0)),
            outcome_text=str(msg.get("outcome_text", "")),
            success=msg.get("success"),
            observation=self.observation,
            caption=self.caption,
        )

    def _send_decision(self, msg: dict) -> None:
        if not self._may_send:
            raise ProtocolError("one decision per feedback: wait for the reply first")
        self._may_send = False
        self._write_message(msg)

    # ------------------------------------------------------------------ #

    def send_action(self, text: str | None = None, pick: dict | None = None,
                    place: dict | None = None) -> Feedback:
        """Send one action (textual or structured) and block for feedback."""
        if text is not None:
            self._send_decision({"type": "action", "text": text})
        elif pick is not None and place is not None:
            self._send_decision({"type": "action", "pick": pick, "place": place})
        else:
            raise ValueError("need either text or pick+place")
        return self._await_feedback()

    def send_done(self) -> None:
        self._send_decision({"type": "done"})

    def send_giveup(self, reason: str = "") -> None:
        self._send_decision({"type": "giveup", "reason": reason})

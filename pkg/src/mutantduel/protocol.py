"""Length-prefixed text messaging between clients and the match server.

Every frame on the wire is ``<decimal byte length>\\n<body>`` where the body
is UTF-8 text.  A body starts with a ``kind`` line naming one of the eight
message kinds, followed by one ``field\\t<key>\\t<value>`` line per payload
entry.  Values are escaped so that multi-line payloads (serialized traces,
reports, level text) travel as single fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ProtocolError

MESSAGE_KINDS = frozenset({
    "join",
    "state_snapshot",
    "record_actions",
    "purchase",
    "place_assertion",
    "confirm_done",
    "execution_report",
    "error",
})

# A frame larger than this is treated as garbage rather than buffered.
MAX_FRAME_BYTES = 16 * 1024 * 1024


@dataclass
class Message:
    kind: str
    fields: dict[str, str] = field(default_factory=dict)

    def get(self, key: str, default: str | None = None) -> str | None:
        return self.fields.get(key, default)

    def require(self, key: str) -> str:
        try:
            return self.fields[key]
        except KeyError:
            raise ProtocolError(f"{self.kind} message is missing {key!r}") from None


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace("\n", "\\n").replace("\r", "\\r")


def _unescape(value: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(value):
        ch = value[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= len(value):
            raise ProtocolError("dangling escape at end of field value")
        nxt = value[i + 1]
        if nxt == "\\":
            out.append("\\")
        elif nxt == "n":
            out.append("\n")
        elif nxt == "r":
            out.append("\r")
        else:
            raise ProtocolError(f"unknown escape sequence \\{nxt}")
        i += 2
    return "".join(out)


def format_body(msg: Message) -> str:
    if msg.kind not in MESSAGE_KINDS:
        raise ProtocolError(f"unknown message kind {msg.kind!r}")
    lines = [f"kind\t{msg.kind}"]
    for key, value in msg.fields.items():
        if "\t" in key or "\n" in key or not key:
            raise ProtocolError(f"bad field key {key!r}")
        lines.append(f"field\t{key}\t{_escape(value)}")
    return "\n".join(lines) + "\n"


def parse_body(text: str) -> Message:
    # split on the newline byte alone: str.splitlines would also split on
    # NEL and friends, which are legitimate characters inside field values
    lines = text.split("\n")
    if not lines or not lines[0].startswith("kind\t"):
        raise ProtocolError("message body does not start with a kind line")
    kind = lines[0][len("kind\t"):]
    if kind not in MESSAGE_KINDS:
        raise ProtocolError(f"unknown message kind {kind!r}")
    fields: dict[str, str] = {}
    for ln in lines[1:]:
        if not ln:
            continue
        tag, _, rest = ln.partition("\t")
        if tag != "field":
            raise ProtocolError(f"unexpected body line {tag!r}")
        key, sep, value = rest.partition("\t")
        if not sep:
            raise ProtocolError(f"field line without a value: {ln!r}")
        if key in fields:
            raise ProtocolError(f"duplicate field {key!r}")
        fields[key] = _unescape(value)
    return Message(kind, fields)


def encode(msg: Message) -> bytes:
    body = format_body(msg).encode("utf-8")
    return str(len(body)).encode("ascii") + b"\n" + body


class FrameStream:
    """Reads and writes framed messages over a connected socket."""

    def __init__(self, sock) -> None:
        self._sock = sock
        self._buf = bytearray()

    def send(self, msg: Message) -> None:
        self._sock.sendall(encode(msg))

    def _fill(self) -> bool:
        chunk = self._sock.recv(65536)
        if not chunk:
            return False
        self._buf.extend(chunk)
        return True

    def recv_text(self) -> str | None:
        """Next frame body, or None once the peer has closed cleanly.

        Raises ProtocolError only for framing problems, after which the
        byte stream cannot be resynchronised and should be dropped.
        """
        while True:
            nl = self._buf.find(b"\n")
            if nl >= 0:
                break
            if len(self._buf) > 20:
                raise ProtocolError("frame length prefix is not terminated")
            if not self._fill():
                if self._buf:
                    raise ProtocolError("connection closed mid-frame")
                return None
        try:
            length = int(bytes(self._buf[:nl]))
        except ValueError:
            raise ProtocolError("frame length prefix is not a number") from None
        if length < 0 or length > MAX_FRAME_BYTES:
            raise ProtocolError(f"frame length {length} out of range")
        del self._buf[:nl + 1]
        while len(self._buf) < length:
            if not self._fill():
                raise ProtocolError("connection closed mid-frame")
        body = bytes(self._buf[:length])
        del self._buf[:length]
        try:
            return body.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"frame body is not UTF-8: {exc}") from exc

    def recv(self) -> Message | None:
        """Next message, or None once the peer has closed cleanly."""
        text = self.recv_text()
        if text is None:
            return None
        return parse_body(text)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass

"""Threaded TCP match server speaking the framed text protocol.

The first two joiners are paired into a match.  Each match runs on one
worker thread fed by a command queue, so match state never sees
concurrent mutation; separate matches run independently.  After every
accepted command both players receive a fresh state snapshot.  A
player's snapshot shows their own side fully; of the opponent it only
carries life and the four attribute levels, never traces, assertions,
action points, or anything harvested.

Phase deadlines and the disconnect grace period come from the match
config (in ticks, ten per second), so tests can run them at millisecond
scale.  The planning deadline also bounds how long the execution
summary stays open.
"""

from __future__ import annotations

import logging
import socket
import threading
import time
from queue import Empty, Queue

from . import assertions as asrt
from .engine import (TICKS_PER_SECOND, serialize_level, serialize_trace)
from .errors import MatchRuleError, ProtocolError, StoreError
from .match import (Match, MatchConfig, Phase, apply_command)
from .rng import derive_seed
from .rules import script_hash
from .store import write_record

log = logging.getLogger(__name__)

_JOIN_TIMEOUT = 30.0


class _Client:
    def __init__(self, stream, name: str, token: str) -> None:
        self.stream = stream
        self.name = name
        self.token = token
        self.connected = True
        self._send_lock = threading.Lock()

    def send(self, msg) -> bool:
        from .protocol import Message  # local to avoid import cycles in tools
        assert isinstance(msg, Message)
        with self._send_lock:
            if not self.connected:
                return False
            try:
                self.stream.send(msg)
                return True
            except OSError:
                self.connected = False
                return False


class _Session:
    def __init__(self, server: "MatchServer", match_id: str,
                 clients: list[_Client], match_seed: int) -> None:
        self.server = server
        self.match_id = match_id
        self.clients = clients
        self.match = Match(server.config, server.script, server.level,
                           match_seed)
        self.queue: Queue = Queue()
        self.log: list[str] = []
        self.seq = 0
        self.confirmed = [False, False]
        self.deadline_at = time.monotonic() + self._phase_seconds()
        self.disconnect_at: list[float | None] = [None, None]
        self.stored = False

    # -- timing --------------------------------------------------------

    def _phase_seconds(self) -> float:
        return self.match.config.planning_deadline / TICKS_PER_SECOND

    def _grace_seconds(self) -> float:
        return self.match.config.forfeit_grace / TICKS_PER_SECOND

    def _next_wakeup(self) -> float | None:
        candidates = [self.deadline_at]
        candidates.extend(t for t in self.disconnect_at if t is not None)
        return min(candidates)

    # -- outgoing messages ----------------------------------------------

    def _snapshot(self, player: int):
        from .protocol import Message
        m = self.match
        me = m.players[player]
        opp = m.players[1 - player]
        fields = {
            "match": self.match_id,
            "you": str(player),
            "token": self.clients[player].token,
            "seq": str(self.seq),
            "phase": m.phase.value,
            "round": str(m.round),
            "round_seed": str(m.round_seed),
            "trace_seed": str(derive_seed(m.match_seed, "trace", player,
                                          m.round)),
            "deadline": f"{max(0.0, self.deadline_at - time.monotonic()):.1f}",
            "winner": "-" if m.winner is None else str(m.winner),
            "drawn": str(int(m.drawn)),
            "my_life": str(me.life),
            "my_ap": str(me.action_points),
            "my_attack": str(me.attack),
            "my_armour": str(me.armour),
            "my_mutant_count": str(me.mutant_count_attr),
            "my_time": str(me.playthrough_time),
            "my_recorded": str(int(me.recorded_this_phase)),
            "my_constructs": str(me.purchased_constructs.get("IfThen", 0)),
            "my_done": str(int(self.confirmed[player])),
            "upgrade_price": str(m.config.upgrade_price),
            "construct_price": str(m.config.construct_price),
            "opp_life": str(opp.life),
            "opp_attack": str(opp.attack),
            "opp_armour": str(opp.armour),
            "opp_mutant_count": str(opp.mutant_count_attr),
            "opp_time": str(opp.playthrough_time),
            "script": m.script.text(),
            "script_hash": script_hash(m.script),
            "level": serialize_level(m.level),
            "trace_count": str(len(me.traces)),
            "assertion_count": str(len(me.assertions)),
        }
        for i, t in enumerate(me.traces):
            fields[f"trace_{i}"] = serialize_trace(t)
        for i, a in enumerate(me.assertions):
            fields[f"assertion_{i}"] = asrt.serialize(a)
            fields[f"assertion_src_{i}"] = a.source_trace or "-"
        return Message("state_snapshot", fields)

    def push_snapshots(self) -> None:
        for player, client in enumerate(self.clients):
            if client.connected:
                client.send(self._snapshot(player))

    def _send_error(self, player: int, code: str, message: str) -> None:
        from .protocol import Message
        self.clients[player].send(Message("error", {
            "match": self.match_id,
            "seq": str(self.seq),
            "code": code,
            "message": message,
        }))

    def _send_report(self, report) -> None:
        from .protocol import Message
        m = self.match
        for player, client in enumerate(self.clients):
            rep = report.players[player]
            fields = {
                "match": self.match_id,
                "you": str(player),
                "seq": str(self.seq),
                "round": str(report.round),
                "damage": str(rep.damage_taken),
                "award": str(rep.action_points_awarded),
                "my_life": str(m.players[player].life),
                "opp_life": str(m.players[1 - player].life),
                "winner": "-" if m.winner is None else str(m.winner),
                "drawn": str(int(m.drawn)),
                "result_count": str(len(rep.results)),
            }
            for i, r in enumerate(rep.results):
                fields[f"result_{i}"] = (
                    f"{r.mid}\t{int(r.killed)}\t{r.killing_assertion or '-'}")
                fields[f"result_marks_{i}"] = ",".join(
                    str(s) for s in sorted(r.mutated)) or "-"
                if r.replay_trace is not None:
                    fields[f"result_trace_{i}"] = serialize_trace(r.replay_trace)
            client.send(Message("execution_report", fields))

    # -- command handling -------------------------------------------------

    def _accept(self, line: str):
        result = apply_command(self.match, line)
        self.log.append(line)
        self.seq += 1
        return result

    def _end_planning(self) -> None:
        report = self._accept("end_planning")
        self.confirmed = [False, False]
        self.deadline_at = time.monotonic() + self._phase_seconds()
        self._send_report(report)
        self.push_snapshots()

    def _award(self) -> None:
        self._accept("award")
        self.confirmed = [False, False]
        self.deadline_at = time.monotonic() + self._phase_seconds()
        self.push_snapshots()

    def _forfeit(self, player: int) -> None:
        self._accept(f"forfeit\t{player}")
        self.push_snapshots()

    def _on_message(self, player: int, msg) -> None:
        if msg.kind == "join":
            self._send_error(player, "joined", "already in a match")
            return
        if msg.fields.get("token") != self.clients[player].token:
            self._send_error(player, "token", "missing or wrong player token")
            return
        try:
            if msg.kind == "record_actions":
                seed = derive_seed(self.match.match_seed, "trace", player,
                                   self.match.round)
                actions = msg.require("actions") or "-"
                self._accept(f"record\t{player}\t{seed}\t{actions}")
            elif msg.kind == "purchase":
                self._accept(f"purchase\t{player}\t{msg.require('item')}")
            elif msg.kind == "place_assertion":
                self._accept(f"place\t{player}\t{msg.require('trace')}\t"
                             f"{msg.require('assertion')}")
            elif msg.kind == "confirm_done":
                self._on_confirm(player)
                return
            else:
                self._send_error(player, "kind",
                                 f"clients do not send {msg.kind}")
                return
        except MatchRuleError as exc:
            self._send_error(player, exc.code, str(exc))
            return
        except ProtocolError as exc:
            self._send_error(player, "protocol", str(exc))
            return
        self.push_snapshots()

    def _on_confirm(self, player: int) -> None:
        phase = self.match.phase
        if phase is Phase.FINISHED:
            self._send_error(player, "phase", "match already finished")
            return
        self.confirmed[player] = True
        if all(self.confirmed):
            if phase is Phase.PLANNING:
                self._end_planning()
            else:
                self._award()
        else:
            self.push_snapshots()

    def _on_disconnect(self, player: int) -> None:
        client = self.clients[player]
        if not client.connected:
            return
        client.connected = False
        if self.match.phase is not Phase.FINISHED:
            self.disconnect_at[player] = time.monotonic() + self._grace_seconds()

    def _on_timers(self) -> None:
        now = time.monotonic()
        for player in (0, 1):
            due = self.disconnect_at[player]
            if due is not None and now >= due \
                    and self.match.phase is not Phase.FINISHED:
                self.disconnect_at[player] = None
                self._forfeit(player)
        if self.match.phase is Phase.FINISHED:
            return
        if now >= self.deadline_at:
            if self.match.phase is Phase.PLANNING:
                self._end_planning()
            else:
                self._award()

    # -- the worker -------------------------------------------------------

    def run(self) -> None:
        self.push_snapshots()
        while self.match.phase is not Phase.FINISHED:
            wakeup = self._next_wakeup()
            timeout = None if wakeup is None \
                else max(0.0, wakeup - time.monotonic())
            try:
                item = self.queue.get(timeout=timeout)
            except Empty:
                self._on_timers()
                continue
            kind, player, payload = item
            if kind == "stop":
                break
            if kind == "msg":
                self._on_message(player, payload)
            elif kind == "disconnect":
                self._on_disconnect(player)
            self._on_timers()
        self._finalize()

    def _finalize(self) -> None:
        if self.match.phase is Phase.FINISHED and self.server.store_dir \
                and not self.stored:
            self.stored = True
            try:
                write_record(self.server.store_dir, self.match_id, self.match,
                             self.log, labels={
                                 "player0": self.clients[0].name,
                                 "player1": self.clients[1].name,
                             })
            except StoreError as exc:
                log.error("store write failed for %s: %s", self.match_id, exc)
        for client in self.clients:
            client.stream.close()
            client.connected = False


class _Pending:
    def __init__(self, stream, name: str) -> None:
        self.stream = stream
        self.name = name
        self.event = threading.Event()
        self.session: _Session | None = None
        self.player = 0


class MatchServer:
    """Accepts connections, pairs joiners, runs one worker per match."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 config: MatchConfig | None = None, script=None, level=None,
                 server_seed: int = 0, store_dir: str | None = None) -> None:
        self.config = config if config is not None else MatchConfig()
        self.config.validate()
        self.script = script
        self.level = level
        self.server_seed = server_seed
        self.store_dir = store_dir
        self._listener = socket.create_server((host, port))
        self.host, self.port = self._listener.getsockname()[:2]
        self._lock = threading.Lock()
        self._waiting: _Pending | None = None
        self._sessions: list[_Session] = []
        self._match_counter = 0
        self._closing = False
        self._closed = threading.Event()
        self._threads: list[threading.Thread] = []
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name="mutantduel-accept", daemon=True)

    def start(self) -> "MatchServer":
        self._accept_thread.start()
        return self

    def wait(self) -> None:
        """Block the calling thread until the server is closed."""
        self._closed.wait()

    # -- accepting ---------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._closing:
            try:
                sock, _ = self._listener.accept()
            except OSError:
                return
            t = threading.Thread(target=self._handle_connection,
                                 args=(sock,), daemon=True)
            t.start()
            self._threads.append(t)

    def _handle_connection(self, sock) -> None:
        from .protocol import FrameStream, Message, parse_body
        sock.settimeout(_JOIN_TIMEOUT)
        stream = FrameStream(sock)
        try:
            text = stream.recv_text()
            msg = parse_body(text) if text is not None else None
        except (ProtocolError, OSError):
            stream.close()
            return
        if msg is None or msg.kind != "join":
            stream.send(Message("error", {
                "code": "join", "message": "first message must be join"}))
            stream.close()
            return
        sock.settimeout(None)
        name = msg.fields.get("name", "anonymous")
        with self._lock:
            if self._closing:
                stream.close()
                return
            if self._waiting is None:
                pending = _Pending(stream, name)
                self._waiting = pending
                wait_for_pairing = True
            else:
                pending = self._waiting
                self._waiting = None
                wait_for_pairing = False
                session = self._make_session(pending, stream, name)
        if wait_for_pairing:
            pending.event.wait()
            if pending.session is None:
                stream.close()
                return
            self._reader_loop(pending.session, pending.player, stream)
        else:
            self._reader_loop(session, 1, stream)

    def _make_session(self, pending: _Pending, stream, name: str) -> _Session:
        self._match_counter += 1
        match_id = f"m{self._match_counter:04d}"
        match_seed = derive_seed(self.server_seed, "match", self._match_counter)
        clients = [
            _Client(pending.stream, pending.name,
                    f"{derive_seed(match_seed, 'token', 0):016x}"),
            _Client(stream, name,
                    f"{derive_seed(match_seed, 'token', 1):016x}"),
        ]
        session = _Session(self, match_id, clients, match_seed)
        self._sessions.append(session)
        worker = threading.Thread(target=session.run,
                                  name=f"mutantduel-{match_id}", daemon=True)
        worker.start()
        self._threads.append(worker)
        pending.session = session
        pending.player = 0
        pending.event.set()
        return session

    # -- per-connection reading ---------------------------------------------

    def _reader_loop(self, session: _Session, player: int, stream) -> None:
        from .protocol import Message, parse_body
        while True:
            try:
                text = stream.recv_text()
            except ProtocolError:
                break
            except OSError:
                break
            if text is None:
                break
            try:
                msg = parse_body(text)
            except ProtocolError as exc:
                # a well-framed but undecodable body: reply and carry on
                session.clients[player].send(Message("error", {
                    "match": session.match_id,
                    "seq": str(session.seq),
                    "code": "protocol",
                    "message": str(exc),
                }))
                continue
            session.queue.put(("msg", player, msg))
        session.queue.put(("disconnect", player, None))

    # -- lifecycle ----------------------------------------------------------

    def close(self) -> None:
        with self._lock:
            self._closing = True
            waiting = self._waiting
            self._waiting = None
        if waiting is not None:
            waiting.session = None
            waiting.event.set()
            waiting.stream.close()
        try:
            self._listener.close()
        except OSError:
            pass
        for session in self._sessions:
            session.queue.put(("stop", None, None))
        for t in self._threads:
            t.join(timeout=2.0)
        self._closed.set()

    def __enter__(self) -> "MatchServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.close()


def serve(host: str, port: int, config: MatchConfig | None = None,
          script=None, level=None, server_seed: int = 0,
          store_dir: str | None = None) -> MatchServer:
    """Start a server and return it; the caller owns its lifetime."""
    return MatchServer(host, port, config, script, level, server_seed,
                       store_dir).start()

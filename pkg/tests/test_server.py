"""Match server over real sockets: pairing, privacy, timers, persistence."""

import socket
import time

import pytest

from mutantduel.engine import parse_trace
from mutantduel.match import MatchConfig
from mutantduel.protocol import FrameStream, Message
from mutantduel.server import MatchServer
from mutantduel.store import list_matches, read_record, verify_record

# deadlines in ticks, ten ticks per second: a minute-long phase deadline
# keeps scripted tests off the timer path, grace stays fast for forfeits
SLOW_CFG = MatchConfig(planning_deadline=600, forfeit_grace=2)

BOMB = "GLOBAL IF Touching(Player, Bomb) THEN GameOver"


class Client:
    def __init__(self, port: int, name: str) -> None:
        sock = socket.create_connection(("127.0.0.1", port), timeout=5)
        sock.settimeout(5)
        self.stream = FrameStream(sock)
        self.stream.send(Message("join", {"name": name}))
        self.match = None
        self.token = None
        self.you = None

    def recv(self) -> Message:
        msg = self.stream.recv()
        assert msg is not None, "server closed the connection unexpectedly"
        if msg.kind == "state_snapshot":
            self.match = msg.fields["match"]
            self.token = msg.fields["token"]
            self.you = msg.fields["you"]
        return msg

    def recv_kind(self, kind: str) -> Message:
        for _ in range(50):
            msg = self.recv()
            if msg.kind == kind:
                return msg
        raise AssertionError(f"no {kind} message arrived")

    def send(self, kind: str, **fields) -> None:
        base = {"match": self.match or "", "token": self.token or ""}
        base.update(fields)
        self.stream.send(Message(kind, base))

    def close(self) -> None:
        self.stream.close()


@pytest.fixture
def server():
    with MatchServer(config=SLOW_CFG, server_seed=42) as srv:
        yield srv


@pytest.fixture
def pair(server):
    a = Client(server.port, "alice")
    b = Client(server.port, "bob")
    sa = a.recv_kind("state_snapshot")
    sb = b.recv_kind("state_snapshot")
    yield server, a, b, sa, sb
    a.close()
    b.close()


class TestPairing:
    def test_both_get_match_start_with_same_round_seed(self, pair):
        _, a, b, sa, sb = pair
        assert sa.fields["round_seed"] == sb.fields["round_seed"]
        assert sa.fields["match"] == sb.fields["match"]
        assert {sa.fields["you"], sb.fields["you"]} == {"0", "1"}
        assert sa.fields["phase"] == "Planning"
        assert sa.fields["my_life"] == sa.fields["opp_life"] == "100"

    def test_two_matches_run_independently(self, server):
        clients = [Client(server.port, f"p{i}") for i in range(4)]
        snaps = [c.recv_kind("state_snapshot") for c in clients]
        ids = {s.fields["match"] for s in snaps}
        assert len(ids) == 2
        assert snaps[0].fields["match"] == snaps[1].fields["match"]
        assert snaps[2].fields["match"] == snaps[3].fields["match"]
        for c in clients:
            c.close()

    def test_non_join_first_message_rejected(self, server):
        sock = socket.create_connection(("127.0.0.1", server.port), timeout=5)
        sock.settimeout(5)
        stream = FrameStream(sock)
        stream.send(Message("purchase", {"item": "attack"}))
        reply = stream.recv()
        assert reply.kind == "error"
        assert reply.fields["code"] == "join"
        stream.close()


class TestCommands:
    def test_record_actions_round_trip(self, pair):
        _, a, b, sa, _ = pair
        advertised_seed = int(sa.fields["trace_seed"])
        a.send("record_actions", actions="Right Right Right")
        snap = a.recv_kind("state_snapshot")
        assert snap.fields["my_recorded"] == "1"
        assert snap.fields["trace_count"] == "1"
        trace = parse_trace(snap.fields["trace_0"])
        assert trace.seed == advertised_seed
        assert trace.length == 3

    def test_sequence_number_counts_accepted_commands(self, pair):
        _, a, b, sa, sb = pair
        assert sa.fields["seq"] == "0"
        a.send("purchase", item="construct:IfThen")
        snap = a.recv_kind("state_snapshot")
        assert snap.fields["seq"] == "1"
        b.recv_kind("state_snapshot")
        b.send("purchase", item="attack")
        assert b.recv_kind("state_snapshot").fields["seq"] == "2"

    def test_rejected_command_mirrors_match_error(self, pair):
        _, a, _, _, _ = pair
        a.send("purchase", item="golden_sword")
        err = a.recv_kind("error")
        assert err.fields["code"] == "item"

    def test_second_recording_rejected(self, pair):
        _, a, _, _, _ = pair
        a.send("record_actions", actions="Right")
        a.recv_kind("state_snapshot")
        a.send("record_actions", actions="Left")
        err = a.recv_kind("error")
        assert err.fields["code"] == "already-recorded"

    def test_bad_token_rejected(self, pair):
        _, a, _, _, _ = pair
        a.token = "forged"
        a.send("purchase", item="attack")
        err = a.recv_kind("error")
        assert err.fields["code"] == "token"

    def test_malformed_body_keeps_connection(self, pair):
        _, a, _, _, _ = pair
        body = b"kind\tnot_a_kind\n"
        a.stream._sock.sendall(str(len(body)).encode() + b"\n" + body)
        err = a.recv_kind("error")
        assert err.fields["code"] == "protocol"
        a.send("purchase", item="attack")
        snap = a.recv_kind("state_snapshot")
        assert snap.fields["my_attack"] == "1"

    def test_place_assertion_flow(self, pair):
        _, a, _, _, _ = pair
        a.send("record_actions", actions="Right Right Right Right")
        a.recv_kind("state_snapshot")
        a.send("purchase", item="construct:IfThen")
        a.recv_kind("state_snapshot")
        a.send("place_assertion", trace="0",
               assertion="GLOBAL IF Touching(Player, Coin) THEN ScoreIncreases")
        snap = a.recv_kind("state_snapshot")
        assert snap.fields["assertion_count"] == "1"
        assert "Touching(Player, Coin)" in snap.fields["assertion_0"]


class TestPrivacy:
    def test_opponent_view_is_life_and_attributes_only(self, pair):
        _, a, b, _, _ = pair
        a.send("record_actions", actions="Right Right Right Right")
        a.recv_kind("state_snapshot")
        a.send("purchase", item="construct:IfThen")
        a.recv_kind("state_snapshot")
        a.send("place_assertion", trace="0",
               assertion="GLOBAL IF Touching(Player, Coin) THEN ScoreIncreases")
        a.recv_kind("state_snapshot")
        snap = None
        for _ in range(3):
            snap = b.recv_kind("state_snapshot")
        allowed_opp = {"opp_life", "opp_attack", "opp_armour",
                       "opp_mutant_count", "opp_time"}
        opp_keys = {k for k in snap.fields if k.startswith("opp_")}
        assert opp_keys == allowed_opp
        assert snap.fields["assertion_count"] == "0"
        assert snap.fields["trace_count"] == "0"
        blob = "".join(f"{k}={v}\n" for k, v in snap.fields.items())
        assert "Touching(Player, Coin)" not in blob
        assert "opp_ap" not in snap.fields

    def test_no_test_artifacts_in_any_player_message(self, pair):
        _, a, b, _, _ = pair
        for c in (a, b):
            c.send("confirm_done")
        report = a.recv_kind("execution_report")
        forbidden = ("mutation_score", "suite", "static_test", "policy",
                     "harvest", "surprise")
        for key in report.fields:
            for word in forbidden:
                assert word not in key.lower()


class TestPhases:
    def finish_planning(self, a, b):
        a.send("confirm_done")
        b.send("confirm_done")
        ra = a.recv_kind("execution_report")
        rb = b.recv_kind("execution_report")
        return ra, rb

    def test_confirm_both_yields_reports(self, pair):
        _, a, b, _, _ = pair
        ra, rb = self.finish_planning(a, b)
        assert ra.fields["round"] == rb.fields["round"] == "1"
        assert int(ra.fields["result_count"]) == 5
        assert ra.fields["damage"] == rb.fields["damage"] == "25"
        snap = a.recv_kind("state_snapshot")
        assert snap.fields["phase"] == "Execution"

    def test_confirm_is_not_revocable_and_single_sided_waits(self, pair):
        _, a, b, _, _ = pair
        a.send("confirm_done")
        snap = a.recv_kind("state_snapshot")
        assert snap.fields["my_done"] == "1"
        assert snap.fields["phase"] == "Planning"

    def test_execution_confirms_advance_to_next_round(self, pair):
        _, a, b, _, _ = pair
        self.finish_planning(a, b)
        a.recv_kind("state_snapshot")
        b.recv_kind("state_snapshot")
        a.send("confirm_done")
        b.send("confirm_done")
        snap = a.recv_kind("state_snapshot")
        while snap.fields["phase"] != "Planning":
            snap = a.recv_kind("state_snapshot")
        assert snap.fields["round"] == "2"
        assert int(snap.fields["my_ap"]) > 10

    def test_planning_deadline_forces_execution(self):
        cfg = MatchConfig(planning_deadline=3, forfeit_grace=50)
        with MatchServer(config=cfg, server_seed=1) as srv:
            a = Client(srv.port, "a")
            b = Client(srv.port, "b")
            a.recv_kind("state_snapshot")
            b.recv_kind("state_snapshot")
            report = a.recv_kind("execution_report")
            assert report.fields["round"] == "1"
            a.close()
            b.close()


class TestForfeit:
    def test_disconnect_mid_planning_forfeits_after_grace(self, pair):
        _, a, b, _, _ = pair
        b.close()
        deadline = time.monotonic() + 5
        snap = None
        while time.monotonic() < deadline:
            snap = a.recv_kind("state_snapshot")
            if snap.fields["phase"] == "Finished":
                break
        assert snap.fields["phase"] == "Finished"
        assert snap.fields["winner"] == a.you
        assert snap.fields["drawn"] == "0"


class TestStore:
    def test_finished_match_is_recorded_and_verifies(self, tmp_path):
        with MatchServer(config=SLOW_CFG, server_seed=3,
                         store_dir=str(tmp_path)) as srv:
            a = Client(srv.port, "alice")
            b = Client(srv.port, "bob")
            a.recv_kind("state_snapshot")
            b.recv_kind("state_snapshot")
            b.close()
            deadline = time.monotonic() + 5
            while time.monotonic() < deadline:
                snap = a.recv_kind("state_snapshot")
                if snap.fields["phase"] == "Finished":
                    break
            deadline = time.monotonic() + 5
            while time.monotonic() < deadline:
                if list_matches(str(tmp_path)):
                    break
                time.sleep(0.05)
            a.close()
        ids = list_matches(str(tmp_path))
        assert ids == ["m0001"]
        verify_record(str(tmp_path), "m0001")
        rec = read_record(str(tmp_path), "m0001")
        assert rec.labels == {"player0": "alice", "player1": "bob"}
        assert rec.commands[-1].startswith("forfeit")

"""Match state machine: phases, economy, damage, and the command log."""

from __future__ import annotations

import pytest

from mutantduel import assertions as asrt
from mutantduel.engine import Action, coverage
from mutantduel.errors import MatchRuleError
from mutantduel.match import (Match, MatchConfig, Phase, apply_command,
                              parse_config, replay_commands, start_match)

R, N, J = Action.Right, Action.NoOp, Action.Jump
DEMO_A = [R, R, R, R, J] + [R] * 5 + [N] * 4
DEMO_B = [R] * 5 + [N] * 10

BOMB = "GLOBAL IF Touching(Player, Bomb) THEN GameOver"
COIN = "GLOBAL IF Touching(Player, Coin) THEN ScoreIncreases"


def test_default_start_state():
    m = start_match(MatchConfig())
    assert m.phase is Phase.PLANNING and m.round == 1
    for p in m.players:
        assert (p.life, p.action_points) == (100, 10)
        assert (p.attack, p.armour, p.mutant_count_attr) == (0, 0, 0)
        assert p.playthrough_time == 150
        assert not p.recorded_this_phase
    assert m.winner is None and not m.drawn


def test_same_seed_gives_identical_matches():
    a = start_match(MatchConfig(), match_seed=5)
    b = start_match(MatchConfig(), match_seed=5)
    assert a.state_hash() == b.state_hash()
    assert a.round_seed == b.round_seed


def test_degenerate_config_rejected():
    with pytest.raises(MatchRuleError):
        start_match(MatchConfig(starting_life=0))
    with pytest.raises(MatchRuleError):
        parse_config("starting_life=-3\n")


def test_config_round_trip_and_errors():
    cfg = MatchConfig(base_mutants=7, attack_step=4)
    assert parse_config(cfg.text()) == cfg
    assert parse_config("# comment\n\nbase_damage=9\n") == MatchConfig(base_damage=9)
    with pytest.raises(MatchRuleError) as err:
        parse_config("no_such_knob=1\n")
    assert err.value.code == "config"
    with pytest.raises(MatchRuleError):
        parse_config("base_damage=lots\n")


def test_single_recording_per_phase():
    m = start_match(MatchConfig())
    assert m.record_playthrough(0, DEMO_A, 0) == 0
    with pytest.raises(MatchRuleError) as err:
        m.record_playthrough(0, DEMO_B, 3)
    assert err.value.code == "already-recorded"
    # the other player records independently
    assert m.record_playthrough(1, DEMO_B, 3) == 0


def test_playthrough_budget_enforced():
    m = start_match(MatchConfig(playthrough_time=10))
    with pytest.raises(MatchRuleError) as err:
        m.record_playthrough(0, [N] * 11, 0)
    assert err.value.code == "budget"
    m.record_playthrough(0, [N] * 10, 0)


def test_purchases_and_prices():
    m = start_match(MatchConfig())
    m.purchase(0, "attack")
    assert m.players[0].action_points == 2
    assert m.players[0].attack == 1
    with pytest.raises(MatchRuleError) as err:
        m.purchase(0, "armour")
    assert err.value.code == "funds"
    assert m.players[0].action_points == 2  # rejected purchase changes nothing
    m.purchase(1, "playthrough_time")
    assert m.players[1].playthrough_time == 180
    with pytest.raises(MatchRuleError):
        m.purchase(0, "construct:Touching")
    with pytest.raises(MatchRuleError):
        m.purchase(0, "helmet")


def test_place_assertion_happy_path_and_rejections():
    m = start_match(MatchConfig())
    m.record_playthrough(0, DEMO_A, 0)
    with pytest.raises(MatchRuleError) as err:
        m.place_assertion(0, 0, asrt.parse(BOMB))
    assert err.value.code == "construct"
    m.purchase(0, "construct:IfThen")
    assert m.players[0].action_points == 5
    with pytest.raises(MatchRuleError) as err:
        m.place_assertion(0, 3, asrt.parse(BOMB))
    assert err.value.code == "trace"
    m.place_assertion(0, 0, asrt.parse(BOMB))
    placed = m.players[0].assertions[0]
    assert placed.owner == "0" and placed.source_trace == "0"
    assert m.players[0].purchased_constructs["IfThen"] == 0


def test_self_violating_oracle_rejected():
    m = start_match(MatchConfig())
    m.record_playthrough(0, DEMO_A, 0)
    m.purchase(0, "construct:IfThen")
    with pytest.raises(MatchRuleError) as err:
        m.place_assertion(0, 0, asrt.parse(
            "GLOBAL IF Touching(Player, Coin) THEN GameOver"))
    assert err.value.code == "invalid-oracle"
    # construct not consumed by the rejected placement
    assert m.players[0].purchased_constructs["IfThen"] == 1
    with pytest.raises(MatchRuleError) as err:
        m.place_assertion(0, 0, asrt.parse(
            "AT 400 IF Touching(Player, Coin) THEN GameOver"))
    assert err.value.code == "scope"


def test_survivor_damage_formula():
    # nobody defends: every mutant survives and hits for base damage
    m = start_match(MatchConfig(base_mutants=3))
    report = m.end_planning()
    for side in report.players:
        assert side.damage_taken == 15
        assert len(side.results) == 3
        assert all(not r.killed for r in side.results)
    assert all(p.life == 85 for p in m.players)
    assert m.phase is Phase.EXECUTION


def test_attack_and_armour_scale_damage():
    m = start_match(MatchConfig(base_mutants=3, starting_ap=20))
    m.purchase(0, "attack")   # scales damage the OPPONENT takes
    m.purchase(1, "armour")   # shields its buyer
    report = m.end_planning()
    # player 0: opponent attack 0, own armour 0 -> 3*5 = 15
    assert report.players[0].damage_taken == 15
    # player 1: opponent attack 1, own armour 1 -> 3*(5+2) - 3 = 18
    assert report.players[1].damage_taken == 18


def test_mutant_count_attribute_loads_the_opponent():
    m = start_match(MatchConfig(starting_ap=20))
    m.purchase(0, "mutant_count")
    report = m.end_planning()
    assert len(report.players[1].results) == 7  # 5 + 1 level * 2
    assert len(report.players[0].results) == 5


def test_equal_attributes_get_identical_mutants():
    m = start_match(MatchConfig(), match_seed=11)
    report = m.end_planning()
    assert [r.mid for r in report.players[0].results] == \
        [r.mid for r in report.players[1].results]


def test_killed_mutant_deals_no_damage():
    m = start_match(MatchConfig(base_mutants=1), match_seed=2)
    for p in (0, 1):
        m.record_playthrough(p, DEMO_A, 0)
        m.purchase(p, "construct:IfThen")
        m.purchase(p, "construct:IfThen")
        m.place_assertion(p, 0, asrt.parse(BOMB))
        m.place_assertion(p, 0, asrt.parse(COIN))
    report = m.end_planning()
    result = report.players[0].results[0]
    assert result.killed
    assert result.killing_assertion == BOMB
    assert result.replay_trace is not None
    assert result.mutated == {10}
    assert report.players[0].damage_taken == 0
    assert m.players[0].life == 100


def test_award_cycle_grants_ap_and_time():
    m = start_match(MatchConfig())
    m.record_playthrough(0, DEMO_A, 0)
    report = m.end_planning()
    expected = 10 + int(coverage(m.players[0].traces, m.script) * 10 + 0.5)
    assert report.players[0].action_points_awarded == expected
    assert report.players[1].action_points_awarded == 10  # no traces, no coverage
    ap_before = [p.action_points for p in m.players]
    seed_before = m.round_seed
    m.award_action_points()
    assert m.phase is Phase.PLANNING and m.round == 2
    assert m.round_seed != seed_before
    assert m.players[0].action_points == ap_before[0] + expected
    assert m.players[1].action_points == ap_before[1] + 10
    assert all(p.playthrough_time == 180 for p in m.players)
    assert all(not p.recorded_this_phase for p in m.players)
    m.record_playthrough(0, DEMO_B, 3)  # fresh budget in the new phase


def test_phase_preconditions():
    m = start_match(MatchConfig())
    with pytest.raises(MatchRuleError):
        m.award_action_points()
    m.end_planning()
    for call in (lambda: m.record_playthrough(0, DEMO_A, 0),
                 lambda: m.purchase(0, "attack"),
                 lambda: m.place_assertion(0, 0, asrt.parse(BOMB)),
                 lambda: m.end_planning()):
        with pytest.raises(MatchRuleError) as err:
            call()
        assert err.value.code == "phase"


def test_simultaneous_death_is_a_draw():
    m = start_match(MatchConfig(starting_life=20))
    m.end_planning()  # 25 damage each
    assert m.phase is Phase.FINISHED
    assert m.winner is None and m.drawn
    assert all(p.life == 0 for p in m.players)
    assert m.check_winner() is None


def test_armoured_player_outlives_and_wins():
    m = start_match(MatchConfig(starting_life=25))
    m.purchase(1, "armour")
    m.end_planning()
    assert m.phase is Phase.FINISHED
    assert m.check_winner() == 1
    assert (m.players[0].life, m.players[1].life) == (0, 3)
    assert not m.drawn
    with pytest.raises(MatchRuleError):
        m.award_action_points()


def test_forfeit_ends_the_match():
    m = start_match(MatchConfig())
    m.forfeit(0)
    assert m.phase is Phase.FINISHED and m.winner == 1
    with pytest.raises(MatchRuleError):
        m.forfeit(1)


COMMAND_LOG = [
    "record\t0\t0\tRight Right Right Right Jump Right Right Right Right Right NoOp NoOp NoOp NoOp",
    "purchase\t0\tconstruct:IfThen",
    f"place\t0\t0\t{BOMB}",
    "record\t1\t3\tRight Right Right Right Right NoOp NoOp NoOp NoOp NoOp",
    "purchase\t1\tattack",
    "end_planning",
    "award",
    "record\t0\t1\t-",
    "end_planning",
]


def test_command_log_replays_to_same_hash():
    cfg = MatchConfig()
    live = Match(cfg, match_seed=7)
    for line in COMMAND_LOG:
        apply_command(live, line)
    rebuilt = replay_commands(cfg, COMMAND_LOG, match_seed=7)
    assert rebuilt.state_hash() == live.state_hash()
    assert rebuilt.state_text() == live.state_text()


def test_rejected_commands_leave_state_untouched():
    m = Match(MatchConfig(), match_seed=7)
    before = m.state_hash()
    for bad in ("record\t0\t0",          # missing field
                "record\t0\tx\t-",        # non-integer seed
                "record\t0\t0\tFly",      # unknown action
                "purchase\t0\thelmet",
                "levitate",
                "award",                   # wrong phase
                "end_planning\textra"):
        with pytest.raises(MatchRuleError):
            apply_command(m, bad)
        assert m.state_hash() == before

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { ViewModel, projectReport, projectSnapshot } from "../src/viewmodel.js";

const here = dirname(fileURLToPath(import.meta.url));
const traceBlob = readFileSync(join(here, "fixtures", "trace_seed7.txt"), "utf8");

function snapshotFields(extra: Record<string, string> = {}): Record<string, string> {
  return {
    match: "m0001",
    you: "0",
    token: "tok0",
    seq: "4",
    phase: "Planning",
    round: "2",
    round_seed: "77",
    trace_seed: "1234",
    deadline: "95.5",
    winner: "-",
    drawn: "0",
    my_life: "85",
    my_ap: "12",
    my_attack: "1",
    my_armour: "2",
    my_mutant_count: "5",
    my_time: "30",
    my_recorded: "1",
    my_constructs: "2",
    my_done: "0",
    upgrade_price: "8",
    construct_price: "5",
    opp_life: "70",
    opp_attack: "3",
    opp_armour: "0",
    opp_mutant_count: "6",
    opp_time: "30",
    script: "0: IF touching(player, bomb) THEN game_over <- 1",
    script_hash: "c40cfc6e114164",
    level: "size\t12\t8\nsolids\t0,0\nspawn\tplayer\t0\t1\t1",
    trace_count: "1",
    trace_0: traceBlob,
    assertion_count: "1",
    assertion_0: "GLOBAL IF Touching(Player, Bomb) THEN GameOver",
    assertion_src_0: "0",
    ...extra,
  };
}

function reportFields(extra: Record<string, string> = {}): Record<string, string> {
  return {
    match: "m0001",
    you: "0",
    seq: "9",
    round: "2",
    damage: "15",
    award: "6",
    my_life: "70",
    opp_life: "55",
    winner: "-",
    drawn: "0",
    result_count: "2",
    result_0: "3\t1\tGLOBAL IF Touching(Player, Bomb) THEN GameOver",
    result_marks_0: "0,4",
    result_trace_0: traceBlob,
    result_1: "9\t0\t-",
    result_marks_1: "-",
    result_trace_1: traceBlob,
    ...extra,
  };
}

describe("snapshot projection", () => {
  it("copies every displayed number verbatim from the fields", () => {
    const view = projectSnapshot(snapshotFields());
    expect(view.match).toBe("m0001");
    expect(view.you).toBe(0);
    expect(view.seq).toBe(4);
    expect(view.phase).toBe("Planning");
    expect(view.round).toBe(2);
    expect(view.deadlineSeconds).toBeCloseTo(95.5);
    expect(view.winner).toBeNull();
    expect(view.my).toEqual({
      life: 85,
      ap: 12,
      attack: 1,
      armour: 2,
      mutantCount: 5,
      playthroughTime: 30,
      recorded: true,
      constructs: 2,
      done: false,
    });
    expect(view.opponent).toEqual({
      life: 70,
      attack: 3,
      armour: 0,
      mutantCount: 6,
      playthroughTime: 30,
    });
    expect(view.prices).toEqual({ upgrade: 8, construct: 5 });
    expect(view.traces).toHaveLength(1);
    expect(view.traces[0]!.length).toBe(7);
    expect(view.assertions).toEqual([
      { text: "GLOBAL IF Touching(Player, Bomb) THEN GameOver", sourceTrace: "0" },
    ]);
  });

  it("parses a concrete winner", () => {
    const view = projectSnapshot(snapshotFields({ phase: "Finished", winner: "1" }));
    expect(view.winner).toBe(1);
  });

  it("refuses snapshots with corrupt numbers", () => {
    expect(() => projectSnapshot(snapshotFields({ my_life: "lots" }))).toThrow();
  });
});

describe("report projection", () => {
  it("builds one card per result row", () => {
    const view = projectReport(reportFields());
    expect(view.damage).toBe(15);
    expect(view.award).toBe(6);
    expect(view.myLife).toBe(70);
    expect(view.oppLife).toBe(55);
    expect(view.cards).toHaveLength(2);
    expect(view.cards[0]).toMatchObject({
      mid: "3",
      killed: true,
      killingAssertion: "GLOBAL IF Touching(Player, Bomb) THEN GameOver",
      markCsv: "0,4",
    });
    expect(view.cards[1]).toMatchObject({ mid: "9", killed: false, killingAssertion: null });
  });
});

describe("view model bookkeeping", () => {
  it("acknowledges pending commands once seq catches up", () => {
    const vm = new ViewModel();
    vm.apply({ kind: "state_snapshot", fields: snapshotFields({ seq: "4" }) });
    vm.enqueue("purchase");
    vm.enqueue("place_assertion");
    expect(vm.pending.map((p) => p.expectSeq)).toEqual([5, 6]);
    vm.apply({ kind: "state_snapshot", fields: snapshotFields({ seq: "5" }) });
    expect(vm.pending.map((p) => p.kind)).toEqual(["place_assertion"]);
    vm.apply({ kind: "state_snapshot", fields: snapshotFields({ seq: "6" }) });
    expect(vm.pending).toEqual([]);
  });

  it("drops one pending command per error", () => {
    const vm = new ViewModel();
    vm.apply({ kind: "state_snapshot", fields: snapshotFields() });
    vm.enqueue("purchase");
    vm.apply({ kind: "error", fields: { code: "ap", detail: "cannot afford" } });
    expect(vm.pending).toEqual([]);
    expect(vm.errors).toEqual([{ code: "ap", detail: "cannot afford" }]);
  });

  it("keeps the report through Execution and clears it on the next Planning", () => {
    const vm = new ViewModel();
    vm.apply({ kind: "state_snapshot", fields: snapshotFields({ phase: "Execution" }) });
    vm.apply({ kind: "execution_report", fields: reportFields() });
    expect(vm.report).not.toBeNull();
    vm.apply({ kind: "state_snapshot", fields: snapshotFields({ phase: "Execution", seq: "9" }) });
    expect(vm.report).not.toBeNull();
    vm.apply({ kind: "state_snapshot", fields: snapshotFields({ phase: "Planning", round: "3" }) });
    expect(vm.report).toBeNull();
  });
});

describe("affordances", () => {
  it("locks recording after one playthrough per phase", () => {
    const vm = new ViewModel();
    vm.apply({ kind: "state_snapshot", fields: snapshotFields({ my_recorded: "0" }) });
    expect(vm.canRecord()).toBe(true);
    vm.apply({ kind: "state_snapshot", fields: snapshotFields({ my_recorded: "1" }) });
    expect(vm.canRecord()).toBe(false);
  });

  it("prices purchases against current ap", () => {
    const vm = new ViewModel();
    vm.apply({ kind: "state_snapshot", fields: snapshotFields({ my_ap: "7" }) });
    expect(vm.canBuyUpgrade()).toBe(false);
    expect(vm.canBuyConstruct()).toBe(true);
    vm.apply({ kind: "state_snapshot", fields: snapshotFields({ my_ap: "4" }) });
    expect(vm.canBuyConstruct()).toBe(false);
  });

  it("requires a construct in hand and a trace to place", () => {
    const vm = new ViewModel();
    vm.apply({ kind: "state_snapshot", fields: snapshotFields({ my_constructs: "0" }) });
    expect(vm.canPlaceAssertion()).toBe(false);
    vm.apply({
      kind: "state_snapshot",
      fields: snapshotFields({ trace_count: "0", trace_0: "" }),
    });
    expect(vm.canPlaceAssertion()).toBe(false);
    vm.apply({ kind: "state_snapshot", fields: snapshotFields() });
    expect(vm.canPlaceAssertion()).toBe(true);
  });

  it("locks all planning inputs once confirmed or out of phase", () => {
    const vm = new ViewModel();
    vm.apply({ kind: "state_snapshot", fields: snapshotFields() });
    expect(vm.inputsLocked()).toBe(false);
    vm.apply({ kind: "state_snapshot", fields: snapshotFields({ my_done: "1" }) });
    expect(vm.inputsLocked()).toBe(true);
    expect(vm.canConfirm()).toBe(false);
    vm.apply({ kind: "state_snapshot", fields: snapshotFields({ phase: "Execution" }) });
    expect(vm.inputsLocked()).toBe(true);
  });
});

/**
 * Pure projection of server messages into what the screens render.
 *
 * Every number shown anywhere in the UI is parsed verbatim from a
 * snapshot or execution report; the view model adds bookkeeping
 * (pending command acknowledgement, error log) but never derives game
 * facts like damage, coverage, or verdicts on its own.
 */

import type { Message } from "./protocol.js";
import { parseTrace, type ParsedTrace } from "./trace.js";

export type PhaseName = "Planning" | "Execution" | "Finished";

export interface SnapshotView {
  match: string;
  you: number;
  token: string;
  seq: number;
  phase: PhaseName;
  round: number;
  deadlineSeconds: number;
  winner: number | null;
  drawn: boolean;
  my: {
    life: number;
    ap: number;
    attack: number;
    armour: number;
    mutantCount: number;
    playthroughTime: number;
    recorded: boolean;
    constructs: number;
    done: boolean;
  };
  opponent: {
    life: number;
    attack: number;
    armour: number;
    mutantCount: number;
    playthroughTime: number;
  };
  prices: { upgrade: number; construct: number };
  scriptText: string;
  scriptHash: string;
  levelText: string;
  traces: ParsedTrace[];
  assertions: { text: string; sourceTrace: string }[];
}

export interface MutantCard {
  mid: string;
  killed: boolean;
  killingAssertion: string | null;
  markCsv: string;
  traceBlob: string | null;
}

export interface ReportView {
  round: number;
  damage: number;
  award: number;
  myLife: number;
  oppLife: number;
  winner: number | null;
  drawn: boolean;
  cards: MutantCard[];
}

export interface PendingCommand {
  kind: string;
  expectSeq: number;
}

function int(fields: Record<string, string>, key: string): number {
  const raw = fields[key];
  const value = Number(raw);
  if (raw === undefined || !Number.isFinite(value)) {
    throw new Error(`snapshot field ${key} is not a number: ${String(raw)}`);
  }
  return value;
}

export function projectSnapshot(fields: Record<string, string>): SnapshotView {
  const traces: ParsedTrace[] = [];
  for (let i = 0; i < int(fields, "trace_count"); i += 1) {
    traces.push(parseTrace(fields[`trace_${i}`] ?? ""));
  }
  const assertions: { text: string; sourceTrace: string }[] = [];
  for (let i = 0; i < int(fields, "assertion_count"); i += 1) {
    assertions.push({
      text: fields[`assertion_${i}`] ?? "",
      sourceTrace: fields[`assertion_src_${i}`] ?? "-",
    });
  }
  return {
    match: fields["match"] ?? "",
    you: int(fields, "you"),
    token: fields["token"] ?? "",
    seq: int(fields, "seq"),
    phase: (fields["phase"] ?? "Planning") as PhaseName,
    round: int(fields, "round"),
    deadlineSeconds: Number(fields["deadline"] ?? "0"),
    winner: fields["winner"] === "-" || fields["winner"] === undefined ? null : Number(fields["winner"]),
    drawn: fields["drawn"] === "1",
    my: {
      life: int(fields, "my_life"),
      ap: int(fields, "my_ap"),
      attack: int(fields, "my_attack"),
      armour: int(fields, "my_armour"),
      mutantCount: int(fields, "my_mutant_count"),
      playthroughTime: int(fields, "my_time"),
      recorded: fields["my_recorded"] === "1",
      constructs: int(fields, "my_constructs"),
      done: fields["my_done"] === "1",
    },
    opponent: {
      life: int(fields, "opp_life"),
      attack: int(fields, "opp_attack"),
      armour: int(fields, "opp_armour"),
      mutantCount: int(fields, "opp_mutant_count"),
      playthroughTime: int(fields, "opp_time"),
    },
    prices: {
      upgrade: int(fields, "upgrade_price"),
      construct: int(fields, "construct_price"),
    },
    scriptText: fields["script"] ?? "",
    scriptHash: fields["script_hash"] ?? "",
    levelText: fields["level"] ?? "",
    traces,
    assertions,
  };
}

export function projectReport(fields: Record<string, string>): ReportView {
  const cards: MutantCard[] = [];
  for (let i = 0; i < int(fields, "result_count"); i += 1) {
    const row = fields[`result_${i}`] ?? "";
    const [mid, killedFlag, killer] = row.split("\t");
    cards.push({
      mid: mid ?? "?",
      killed: killedFlag === "1",
      killingAssertion: killer === "-" || killer === undefined ? null : killer,
      markCsv: fields[`result_marks_${i}`] ?? "-",
      traceBlob: fields[`result_trace_${i}`] ?? null,
    });
  }
  return {
    round: int(fields, "round"),
    damage: int(fields, "damage"),
    award: int(fields, "award"),
    myLife: int(fields, "my_life"),
    oppLife: int(fields, "opp_life"),
    winner: fields["winner"] === "-" || fields["winner"] === undefined ? null : Number(fields["winner"]),
    drawn: fields["drawn"] === "1",
    cards,
  };
}

export class ViewModel {
  snapshot: SnapshotView | null = null;
  report: ReportView | null = null;
  errors: { code: string; detail: string }[] = [];
  pending: PendingCommand[] = [];

  /** Queue a command about to be sent; acknowledged once seq catches up. */
  enqueue(kind: string): void {
    const base = this.snapshot ? this.snapshot.seq : 0;
    const tail = this.pending.length > 0 ? this.pending[this.pending.length - 1]!.expectSeq : base;
    this.pending.push({ kind, expectSeq: Math.max(base, tail) + 1 });
  }

  apply(msg: Message): void {
    if (msg.kind === "state_snapshot") {
      this.snapshot = projectSnapshot(msg.fields);
      const seq = this.snapshot.seq;
      this.pending = this.pending.filter((cmd) => cmd.expectSeq > seq);
      if (this.snapshot.phase !== "Execution") {
        // stale report cards disappear once the next planning phase starts
        if (this.snapshot.phase === "Planning") this.report = null;
      }
    } else if (msg.kind === "execution_report") {
      this.report = projectReport(msg.fields);
    } else if (msg.kind === "error") {
      this.errors.push({
        code: msg.fields["code"] ?? "?",
        detail: msg.fields["detail"] ?? "",
      });
      this.pending.shift();
    }
  }

  // -- affordances the planning screen binds buttons to ---------------------

  canRecord(): boolean {
    const s = this.snapshot;
    return !!s && s.phase === "Planning" && !s.my.recorded && !s.my.done;
  }

  canBuyUpgrade(): boolean {
    const s = this.snapshot;
    return !!s && s.phase === "Planning" && !s.my.done && s.my.ap >= s.prices.upgrade;
  }

  canBuyConstruct(): boolean {
    const s = this.snapshot;
    return !!s && s.phase === "Planning" && !s.my.done && s.my.ap >= s.prices.construct;
  }

  canPlaceAssertion(): boolean {
    const s = this.snapshot;
    return !!s && s.phase === "Planning" && !s.my.done && s.my.constructs > 0 && s.traces.length > 0;
  }

  canConfirm(): boolean {
    const s = this.snapshot;
    return !!s && s.phase !== "Finished" && !s.my.done;
  }

  inputsLocked(): boolean {
    const s = this.snapshot;
    return !s || s.phase !== "Planning" || s.deadlineSeconds <= 0 || s.my.done;
  }
}

/**
 * Assertion editor state machine.
 *
 * The workspace is one IfThen construct with a condition slot, an
 * outcome slot, and a scope. Players fill slots through palette picks
 * and drop-down choices; each call on this module is one editor
 * interaction. Emitting is only possible once every slot of the chosen
 * shapes is filled, and the emitted text is the canonical serialization
 * the server echoes back after parsing.
 */

import {
  ACTOR_NAMES,
  ATTR_NAMES,
  CATEGORIES,
  OP_SYMBOLS,
  attributeIsBlock,
  compareBlock,
  gameOverBlock,
  ifThen,
  scoreIncreasesBlock,
  serializeAssertion,
  touchingBlock,
  type ActorName,
  type AssertionTree,
  type AttrName,
  type OpSymbol,
  type Scope,
} from "./blocks.js";
import { discoveredActors, type ParsedTrace } from "./trace.js";

export const PALETTE_CATEGORIES = CATEGORIES;

export type ConditionKind = "Touching" | "Compare";
export type OutcomeKind = "GameOver" | "ScoreIncreases" | "AttributeIs";

interface TouchingDraft {
  kind: "Touching";
  a: ActorName | null;
  b: ActorName | null;
}

interface CompareDraft {
  kind: "Compare";
  actor: ActorName | null;
  attr: AttrName | null;
  op: OpSymbol | null;
  value: number | null;
}

interface AttributeIsDraft {
  kind: "AttributeIs";
  actor: ActorName | null;
  attr: AttrName | null;
  op: OpSymbol | null;
  value: number | null;
}

type ConditionDraft = TouchingDraft | CompareDraft;
type OutcomeDraft = { kind: "GameOver" } | { kind: "ScoreIncreases" } | AttributeIsDraft;

export class EditorState {
  scope: Scope = { type: "global" };
  condition: ConditionDraft | null = null;
  outcome: OutcomeDraft | null = null;
  interactions = 0;

  private touch(): void {
    this.interactions += 1;
  }

  pickCondition(kind: ConditionKind): void {
    this.touch();
    this.condition =
      kind === "Touching"
        ? { kind, a: null, b: null }
        : { kind, actor: null, attr: null, op: null, value: null };
  }

  pickOutcome(kind: OutcomeKind): void {
    this.touch();
    this.outcome =
      kind === "AttributeIs"
        ? { kind, actor: null, attr: null, op: null, value: null }
        : { kind };
  }

  setConditionActor(slot: "a" | "b", actor: ActorName): void {
    this.touch();
    if (!this.condition) return;
    if (this.condition.kind === "Touching") {
      this.condition[slot] = actor;
    } else if (slot === "a") {
      this.condition.actor = actor;
    }
  }

  setConditionAttr(attr: AttrName): void {
    this.touch();
    if (this.condition?.kind === "Compare") this.condition.attr = attr;
  }

  setConditionOp(op: OpSymbol): void {
    this.touch();
    if (this.condition?.kind === "Compare") this.condition.op = op;
  }

  setConditionValue(value: number): void {
    this.touch();
    if (this.condition?.kind === "Compare") this.condition.value = value;
  }

  setOutcomeActor(actor: ActorName): void {
    this.touch();
    if (this.outcome?.kind === "AttributeIs") this.outcome.actor = actor;
  }

  setOutcomeAttr(attr: AttrName): void {
    this.touch();
    if (this.outcome?.kind === "AttributeIs") this.outcome.attr = attr;
  }

  setOutcomeOp(op: OpSymbol): void {
    this.touch();
    if (this.outcome?.kind === "AttributeIs") this.outcome.op = op;
  }

  setOutcomeValue(value: number): void {
    this.touch();
    if (this.outcome?.kind === "AttributeIs") this.outcome.value = value;
  }

  setScope(scope: Scope): void {
    this.touch();
    this.scope = scope;
  }

  clear(): void {
    this.touch();
    this.scope = { type: "global" };
    this.condition = null;
    this.outcome = null;
  }

  /** Submit stays disabled until this returns true. */
  complete(): boolean {
    if (!this.condition || !this.outcome) return false;
    const c = this.condition;
    if (c.kind === "Touching" && (c.a === null || c.b === null)) return false;
    if (c.kind === "Compare" && (c.actor === null || c.attr === null || c.op === null || c.value === null)) {
      return false;
    }
    const o = this.outcome;
    if (o.kind === "AttributeIs" && (o.actor === null || o.attr === null || o.op === null || o.value === null)) {
      return false;
    }
    return true;
  }

  build(): AssertionTree {
    if (!this.complete()) {
      throw new Error("workspace has unfilled slots");
    }
    const c = this.condition!;
    const condition =
      c.kind === "Touching"
        ? touchingBlock(c.a!, c.b!)
        : compareBlock(c.actor!, c.attr!, c.op!, c.value!);
    const o = this.outcome!;
    const outcome =
      o.kind === "GameOver"
        ? gameOverBlock()
        : o.kind === "ScoreIncreases"
          ? scoreIncreasesBlock()
          : attributeIsBlock(o.actor!, o.attr!, o.op!, o.value!);
    return ifThen(condition, outcome, this.scope);
  }

  emitText(): string {
    return serializeAssertion(this.build());
  }
}

/**
 * Actor drop-down entries for a trace: only kinds the playthrough
 * actually met, shown under their assertion-language names.
 */
export function actorMenu(trace: ParsedTrace): ActorName[] {
  const seen = new Set(discoveredActors(trace));
  return ACTOR_NAMES.filter((name) => seen.has(name.toLowerCase()));
}

export function attrMenu(): readonly AttrName[] {
  return ATTR_NAMES;
}

export function opMenu(): readonly OpSymbol[] {
  return OP_SYMBOLS;
}

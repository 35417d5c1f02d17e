/**
 * Block trees for the assertion editor.
 *
 * Mirrors the server's closed grammar: a construct block holds one
 * condition (touch test or attribute comparison) and one outcome
 * (GameOver, ScoreIncreases, or an attribute check), under a scope of
 * GLOBAL, AT t, or WINDOW t1 t2. Equality is structural; serialization
 * is the canonical text the server parses and echoes back.
 */

export const CATEGORIES = [
  "construct",
  "actor",
  "attribute",
  "operator",
  "value",
  "outcome",
] as const;

export type Category = (typeof CATEGORIES)[number];

export const ACTOR_NAMES = ["Player", "Coin", "Bomb", "Goal"] as const;
export const ATTR_NAMES = ["x", "y", "score", "alive"] as const;
export const OP_SYMBOLS = ["<", ">", "=="] as const;

export type ActorName = (typeof ACTOR_NAMES)[number];
export type AttrName = (typeof ATTR_NAMES)[number];
export type OpSymbol = (typeof OP_SYMBOLS)[number];

const OP_KIND: Record<OpSymbol, string> = { "<": "Less", ">": "Greater", "==": "Equals" };
const KIND_OP: Record<string, OpSymbol> = { Less: "<", Greater: ">", Equals: "==" };

export interface Block {
  category: Category;
  kind: string;
  children: readonly Block[];
  payload?: number;
}

export type Scope =
  | { type: "global" }
  | { type: "at"; t: number }
  | { type: "window"; t1: number; t2: number };

export interface AssertionTree {
  scope: Scope;
  root: Block;
}

export class AssertionSyntaxError extends Error {}

// --- builders -------------------------------------------------------------

export function actorBlock(name: ActorName): Block {
  return { category: "actor", kind: name, children: [] };
}

export function attrBlock(actor: ActorName, attr: AttrName): Block {
  return { category: "attribute", kind: attr, children: [actorBlock(actor)] };
}

export function valueBlock(v: number): Block {
  if (!Number.isInteger(v)) {
    throw new AssertionSyntaxError(`value must be an integer, got ${v}`);
  }
  return { category: "value", kind: "Int", children: [], payload: v };
}

export function compareBlock(actor: ActorName, attr: AttrName, op: OpSymbol, value: number): Block {
  return {
    category: "operator",
    kind: OP_KIND[op],
    children: [attrBlock(actor, attr), valueBlock(value)],
  };
}

export function touchingBlock(a: ActorName, b: ActorName): Block {
  return { category: "operator", kind: "Touching", children: [actorBlock(a), actorBlock(b)] };
}

export function gameOverBlock(): Block {
  return { category: "outcome", kind: "GameOver", children: [] };
}

export function scoreIncreasesBlock(): Block {
  return { category: "outcome", kind: "ScoreIncreases", children: [] };
}

export function attributeIsBlock(actor: ActorName, attr: AttrName, op: OpSymbol, value: number): Block {
  return {
    category: "outcome",
    kind: "AttributeIs",
    children: [compareBlock(actor, attr, op, value)],
  };
}

export function ifThen(condition: Block, outcome: Block, scope: Scope = { type: "global" }): AssertionTree {
  return {
    scope,
    root: { category: "construct", kind: "IfThen", children: [condition, outcome] },
  };
}

// --- equality ---------------------------------------------------------------

function blockEq(a: Block, b: Block): boolean {
  if (a.category !== b.category || a.kind !== b.kind) return false;
  if ((a.payload ?? null) !== (b.payload ?? null)) return false;
  if (a.children.length !== b.children.length) return false;
  return a.children.every((child, i) => blockEq(child, b.children[i]!));
}

function scopeEq(a: Scope, b: Scope): boolean {
  if (a.type !== b.type) return false;
  if (a.type === "at" && b.type === "at") return a.t === b.t;
  if (a.type === "window" && b.type === "window") return a.t1 === b.t1 && a.t2 === b.t2;
  return true;
}

export function blocksEqual(a: AssertionTree, b: AssertionTree): boolean {
  return scopeEq(a.scope, b.scope) && blockEq(a.root, b.root);
}

// --- serialization ----------------------------------------------------------

function scopeText(scope: Scope): string {
  switch (scope.type) {
    case "global":
      return "GLOBAL";
    case "at":
      return `AT ${scope.t}`;
    case "window":
      return `WINDOW ${scope.t1} ${scope.t2}`;
  }
}

function attrText(block: Block): string {
  const actor = block.children[0]!;
  return `Attr(${actor.kind}, ${block.kind})`;
}

function conditionText(block: Block): string {
  if (block.kind === "Touching") {
    const [a, b] = block.children;
    return `Touching(${a!.kind}, ${b!.kind})`;
  }
  const [attr, val] = block.children;
  return `Compare(${attrText(attr!)}, ${KIND_OP[block.kind]}, ${val!.payload})`;
}

function outcomeText(block: Block): string {
  if (block.kind === "GameOver") return "GameOver";
  if (block.kind === "ScoreIncreases") return "ScoreIncreases";
  const cmp = block.children[0]!;
  const [attr, val] = cmp.children;
  return `AttributeIs(${attrText(attr!)}, ${KIND_OP[cmp.kind]}, ${val!.payload})`;
}

export function serializeAssertion(tree: AssertionTree): string {
  const [cond, out] = tree.root.children;
  return `${scopeText(tree.scope)} IF ${conditionText(cond!)} THEN ${outcomeText(out!)}`;
}

// --- parsing ----------------------------------------------------------------

type Token = { type: "int" | "name" | "sym"; value: string; col: number };

function tokenize(text: string): Token[] {
  const pattern = /(-?\d+)|([A-Za-z_][A-Za-z0-9_]*)|(==|[(),<>])|(\s+)/y;
  const tokens: Token[] = [];
  let pos = 0;
  while (pos < text.length) {
    pattern.lastIndex = pos;
    const m = pattern.exec(text);
    if (!m) {
      throw new AssertionSyntaxError(`bad character ${JSON.stringify(text[pos])} at ${pos + 1}`);
    }
    if (m[1] !== undefined) tokens.push({ type: "int", value: m[1], col: pos + 1 });
    else if (m[2] !== undefined) tokens.push({ type: "name", value: m[2], col: pos + 1 });
    else if (m[3] !== undefined) tokens.push({ type: "sym", value: m[3], col: pos + 1 });
    pos = pattern.lastIndex;
  }
  return tokens;
}

class Parser {
  private i = 0;

  constructor(private readonly tokens: Token[]) {}

  private peek(): Token | undefined {
    return this.tokens[this.i];
  }

  take(type?: Token["type"], value?: string): string {
    const tok = this.tokens[this.i];
    if (!tok || (type && tok.type !== type) || (value !== undefined && tok.value !== value)) {
      const got = tok ? JSON.stringify(tok.value) : "end of input";
      throw new AssertionSyntaxError(`expected ${value ?? type}, got ${got}`);
    }
    this.i += 1;
    return tok.value;
  }

  atEnd(): boolean {
    return this.i >= this.tokens.length;
  }

  int(): number {
    return Number(this.take("int"));
  }

  op(): OpSymbol {
    const tok = this.peek();
    if (tok && ((tok.type === "sym" && (tok.value === "<" || tok.value === ">")) || tok.value === "==")) {
      this.i += 1;
      return tok.value as OpSymbol;
    }
    throw new AssertionSyntaxError(`expected <, > or ==, got ${JSON.stringify(tok?.value)}`);
  }

  actor(): ActorName {
    const name = this.take("name");
    if (!(ACTOR_NAMES as readonly string[]).includes(name)) {
      throw new AssertionSyntaxError(`unknown actor ${JSON.stringify(name)}`);
    }
    return name as ActorName;
  }

  attrRef(): { actor: ActorName; attr: AttrName } {
    this.take("name", "Attr");
    this.take("sym", "(");
    const actor = this.actor();
    this.take("sym", ",");
    const attr = this.take("name");
    if (!(ATTR_NAMES as readonly string[]).includes(attr)) {
      throw new AssertionSyntaxError(`unknown attribute ${JSON.stringify(attr)}`);
    }
    this.take("sym", ")");
    return { actor, attr: attr as AttrName };
  }
}

function parseScope(p: Parser): Scope {
  const word = p.take("name");
  if (word === "GLOBAL") return { type: "global" };
  if (word === "AT") return { type: "at", t: p.int() };
  if (word === "WINDOW") {
    const t1 = p.int();
    const t2 = p.int();
    return { type: "window", t1, t2 };
  }
  throw new AssertionSyntaxError(`expected GLOBAL, AT or WINDOW, got ${JSON.stringify(word)}`);
}

function parseCondition(p: Parser): Block {
  const word = p.take("name");
  if (word === "Touching") {
    p.take("sym", "(");
    const a = p.actor();
    p.take("sym", ",");
    const b = p.actor();
    p.take("sym", ")");
    return touchingBlock(a, b);
  }
  if (word === "Compare") {
    p.take("sym", "(");
    const ref = p.attrRef();
    p.take("sym", ",");
    const op = p.op();
    p.take("sym", ",");
    const value = p.int();
    p.take("sym", ")");
    return compareBlock(ref.actor, ref.attr, op, value);
  }
  throw new AssertionSyntaxError(`expected Touching or Compare, got ${JSON.stringify(word)}`);
}

function parseOutcome(p: Parser): Block {
  const word = p.take("name");
  if (word === "GameOver") return gameOverBlock();
  if (word === "ScoreIncreases") return scoreIncreasesBlock();
  if (word === "AttributeIs") {
    p.take("sym", "(");
    const ref = p.attrRef();
    p.take("sym", ",");
    const op = p.op();
    p.take("sym", ",");
    const value = p.int();
    p.take("sym", ")");
    return attributeIsBlock(ref.actor, ref.attr, op, value);
  }
  throw new AssertionSyntaxError(`expected GameOver, ScoreIncreases or AttributeIs, got ${JSON.stringify(word)}`);
}

export function parseAssertion(text: string): AssertionTree {
  const p = new Parser(tokenize(text));
  const scope = parseScope(p);
  p.take("name", "IF");
  const condition = parseCondition(p);
  p.take("name", "THEN");
  const outcome = parseOutcome(p);
  if (!p.atEnd()) {
    throw new AssertionSyntaxError("trailing input after the assertion");
  }
  return ifThen(condition, outcome, scope);
}

/**
 * Client-side readers for the server's trace and level text blobs.
 * Read-only: the client replays what the server recorded, never steps
 * the world itself.
 */

export interface ActorView {
  aid: number;
  kind: string;
  x: number;
  y: number;
  alive: boolean;
  facing: number;
}

export interface Frame {
  tick: number;
  score: number;
  gameOver: boolean;
  actors: readonly ActorView[];
}

export interface ParsedTrace {
  scriptHash: string;
  seed: number;
  length: number;
  actions: readonly string[];
  initial: Frame;
  frames: readonly Frame[];
  covered: readonly ReadonlySet<number>[];
}

export interface Level {
  width: number;
  height: number;
  solids: ReadonlySet<string>;
}

export class TraceSyntaxError extends Error {}

function parseFrameFields(fields: string[]): Frame {
  const [tick, score, over, ...actorToks] = fields;
  if (tick === undefined || score === undefined || over === undefined) {
    throw new TraceSyntaxError("frame line too short");
  }
  const actors = actorToks.map((tok) => {
    const parts = tok.split(":");
    if (parts.length !== 6) {
      throw new TraceSyntaxError(`bad actor token ${JSON.stringify(tok)}`);
    }
    return {
      aid: Number(parts[0]),
      kind: parts[1]!,
      x: Number(parts[2]),
      y: Number(parts[3]),
      alive: parts[4] === "1",
      facing: Number(parts[5]),
    };
  });
  return { tick: Number(tick), score: Number(score), gameOver: over === "1", actors };
}

export function parseTrace(text: string): ParsedTrace {
  const lines = text.split("\n").filter((line) => line !== "");
  if (lines.length < 5) {
    throw new TraceSyntaxError("trace blob too short");
  }
  const head: Record<string, string> = {};
  for (const line of lines.slice(0, 4)) {
    const tab = line.indexOf("\t");
    if (tab < 0) throw new TraceSyntaxError(`bad header line ${JSON.stringify(line)}`);
    head[line.slice(0, tab)] = line.slice(tab + 1);
  }
  const scriptHash = head["script"];
  const seed = Number(head["seed"]);
  const length = Number(head["length"]);
  const actionsWord = head["actions"];
  if (scriptHash === undefined || !Number.isInteger(seed) || !Number.isInteger(length) || actionsWord === undefined) {
    throw new TraceSyntaxError("incomplete trace header");
  }
  const actions = actionsWord === "-" ? [] : actionsWord.split(" ");

  const initialLine = lines[4]!;
  if (!initialLine.startsWith("initial\t")) {
    throw new TraceSyntaxError("missing initial frame");
  }
  const initial = parseFrameFields(initialLine.split("\t").slice(1));

  const frames: Frame[] = [];
  const covered: Set<number>[] = [];
  for (const line of lines.slice(5)) {
    if (!line.startsWith("frame\t")) {
      throw new TraceSyntaxError(`expected a frame line, got ${JSON.stringify(line)}`);
    }
    const fields = line.split("\t").slice(1);
    const covText = fields.pop();
    if (covText === undefined) throw new TraceSyntaxError("frame line without coverage");
    frames.push(parseFrameFields(fields));
    covered.push(new Set(covText === "-" ? [] : covText.split(",").map(Number)));
  }
  if (frames.length !== length || actions.length !== length) {
    throw new TraceSyntaxError(
      `trace claims length ${length} but has ${frames.length} frames and ${actions.length} actions`,
    );
  }
  return { scriptHash, seed, length, actions, initial, frames, covered };
}

export function parseLevel(text: string): Level {
  let width = 0;
  let height = 0;
  const solids = new Set<string>();
  for (const line of text.split("\n")) {
    if (line === "") continue;
    const parts = line.split("\t");
    if (parts[0] === "size") {
      width = Number(parts[1]);
      height = Number(parts[2]);
    } else if (parts[0] === "solids") {
      if (parts[1] !== "-" && parts[1] !== undefined) {
        for (const cell of parts[1].split(" ")) solids.add(cell);
      }
    } else if (parts[0] !== "spawn") {
      throw new TraceSyntaxError(`unknown level line ${JSON.stringify(parts[0])}`);
    }
  }
  if (width < 1 || height < 1) {
    throw new TraceSyntaxError("level blob lacks a size line");
  }
  return { width, height, solids };
}

/** Actor kinds that appear anywhere in the playthrough, initial frame included. */
export function discoveredActors(trace: ParsedTrace): string[] {
  const kinds = new Set<string>();
  for (const actor of trace.initial.actors) kinds.add(actor.kind);
  for (const frame of trace.frames) {
    for (const actor of frame.actors) kinds.add(actor.kind);
  }
  return [...kinds].sort();
}

/** Statement ids executed at some step of the trace. */
export function coveredIds(trace: ParsedTrace): Set<number> {
  const ids = new Set<number>();
  for (const step of trace.covered) {
    for (const sid of step) ids.add(sid);
  }
  return ids;
}

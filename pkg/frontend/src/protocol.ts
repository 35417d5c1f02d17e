/**
 * Wire codec shared with the match server.
 *
 * Frames are `<decimal byte length>\n<body>` in UTF-8. Bodies are a
 * `kind\t<kind>` line followed by `field\t<key>\t<value>` lines, where
 * values escape only backslash, newline, and carriage return. Tabs
 * survive unescaped because field lines split on the first two tabs.
 */

export const MESSAGE_KINDS = [
  "join",
  "state_snapshot",
  "record_actions",
  "purchase",
  "place_assertion",
  "confirm_done",
  "execution_report",
  "error",
] as const;

export type MessageKind = (typeof MESSAGE_KINDS)[number];

const KIND_SET: ReadonlySet<string> = new Set(MESSAGE_KINDS);

export const MAX_FRAME_BYTES = 16 * 1024 * 1024;

export interface Message {
  kind: MessageKind;
  fields: Record<string, string>;
}

export class ProtocolError extends Error {}

function escapeValue(value: string): string {
  return value
    .replaceAll("\\", "\\\\")
    .replaceAll("\n", "\\n")
    .replaceAll("\r", "\\r");
}

function unescapeValue(value: string): string {
  let out = "";
  let i = 0;
  while (i < value.length) {
    const ch = value[i]!;
    if (ch !== "\\") {
      out += ch;
      i += 1;
      continue;
    }
    const next = value[i + 1];
    if (next === undefined) {
      throw new ProtocolError("dangling escape at end of value");
    }
    if (next === "\\") out += "\\";
    else if (next === "n") out += "\n";
    else if (next === "r") out += "\r";
    else throw new ProtocolError(`unknown escape \\${next}`);
    i += 2;
  }
  return out;
}

export function formatBody(kind: MessageKind, fields: Record<string, string>): string {
  if (!KIND_SET.has(kind)) {
    throw new ProtocolError(`unknown message kind ${JSON.stringify(kind)}`);
  }
  let body = `kind\t${kind}\n`;
  for (const [key, value] of Object.entries(fields)) {
    if (key === "" || key.includes("\t") || key.includes("\n")) {
      throw new ProtocolError(`bad field key ${JSON.stringify(key)}`);
    }
    body += `field\t${key}\t${escapeValue(value)}\n`;
  }
  return body;
}

export function parseBody(text: string): Message {
  // split on "\n" alone: values may legally contain U+0085 and friends,
  // which fancier line splitting would also break on
  const lines = text.split("\n");
  if (lines[lines.length - 1] === "") lines.pop();
  const head = lines.shift();
  if (head === undefined || !head.startsWith("kind\t")) {
    throw new ProtocolError("body does not start with a kind line");
  }
  const kind = head.slice("kind\t".length);
  if (!KIND_SET.has(kind)) {
    throw new ProtocolError(`unknown message kind ${JSON.stringify(kind)}`);
  }
  const fields: Record<string, string> = {};
  for (const line of lines) {
    const first = line.indexOf("\t");
    if (first < 0 || line.slice(0, first) !== "field") {
      throw new ProtocolError(`expected a field line, got ${JSON.stringify(line)}`);
    }
    const second = line.indexOf("\t", first + 1);
    if (second < 0) {
      throw new ProtocolError("field line without a value");
    }
    const key = line.slice(first + 1, second);
    if (key in fields) {
      throw new ProtocolError(`duplicate field ${JSON.stringify(key)}`);
    }
    fields[key] = unescapeValue(line.slice(second + 1));
  }
  return { kind: kind as MessageKind, fields };
}

const encoder = new TextEncoder();
const decoder = new TextDecoder("utf-8", { fatal: true });

export function encodeFrame(kind: MessageKind, fields: Record<string, string>): Uint8Array {
  const body = encoder.encode(formatBody(kind, fields));
  const prefix = encoder.encode(`${body.byteLength}\n`);
  const frame = new Uint8Array(prefix.byteLength + body.byteLength);
  frame.set(prefix, 0);
  frame.set(body, prefix.byteLength);
  return frame;
}

/**
 * Incremental decoder: feed it arbitrary byte chunks, collect complete
 * messages. Framing violations throw and poison the decoder.
 */
export class FrameDecoder {
  private buffer = new Uint8Array(0);
  private expected: number | null = null;

  feed(chunk: Uint8Array): Message[] {
    const merged = new Uint8Array(this.buffer.byteLength + chunk.byteLength);
    merged.set(this.buffer, 0);
    merged.set(chunk, this.buffer.byteLength);
    this.buffer = merged;

    const out: Message[] = [];
    for (;;) {
      if (this.expected === null) {
        const nl = this.buffer.indexOf(0x0a);
        if (nl < 0) {
          if (this.buffer.byteLength > 20) {
            throw new ProtocolError("unterminated length prefix");
          }
          break;
        }
        const prefix = decoder.decode(this.buffer.subarray(0, nl));
        if (!/^\d+$/.test(prefix)) {
          throw new ProtocolError(`bad length prefix ${JSON.stringify(prefix)}`);
        }
        const length = Number(prefix);
        if (length > MAX_FRAME_BYTES) {
          throw new ProtocolError(`frame of ${length} bytes exceeds the limit`);
        }
        this.expected = length;
        this.buffer = this.buffer.subarray(nl + 1);
      }
      if (this.buffer.byteLength < this.expected) break;
      const body = this.buffer.subarray(0, this.expected);
      this.buffer = this.buffer.subarray(this.expected);
      this.expected = null;
      out.push(parseBody(decoder.decode(body)));
    }
    return out;
  }
}

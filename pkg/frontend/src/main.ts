/**
 * Browser entry point: joins a duel over a WebSocket relay and renders
 * the three screens (join, planning, execution) straight from the
 * view model. All game facts on screen come from server messages; the
 * client records keystrokes and builds assertion blocks, nothing more.
 */

import { OP_SYMBOLS, parseAssertion, type ActorName, type AttrName, type OpSymbol, type Scope } from "./blocks.js";
import { EditorState, PALETTE_CATEGORIES, actorMenu, attrMenu, type ConditionKind, type OutcomeKind } from "./editor.js";
import { Connection, WebSocketTransport } from "./net.js";
import { drawFrame } from "./renderer.js";
import { clampPosition, frameAt, parseMarkers, scopeFromSlider } from "./scrubber.js";
import { parseLevel, parseTrace, type Level, type ParsedTrace } from "./trace.js";
import { ViewModel } from "./viewmodel.js";

const ACTION_KEYS: Record<string, string> = {
  ArrowLeft: "Left",
  ArrowRight: "Right",
  ArrowUp: "Jump",
  " ": "Jump",
  ArrowDown: "NoOp",
};

interface AppState {
  conn: Connection | null;
  vm: ViewModel;
  editor: EditorState;
  recording: boolean;
  keystrokes: string[];
  selectedTrace: number;
  scrubPos: number;
  windowAnchor: number | null;
  selectedCard: number;
  cardScrubPos: number;
  status: string;
}

const state: AppState = {
  conn: null,
  vm: new ViewModel(),
  editor: new EditorState(),
  recording: false,
  keystrokes: [],
  selectedTrace: 0,
  scrubPos: 0,
  windowAnchor: null,
  selectedCard: 0,
  cardScrubPos: 0,
  status: "not connected",
};

// -- tiny DOM helpers --------------------------------------------------------

type Child = Node | string | null;

function h(tag: string, attrs: Record<string, string> = {}, ...children: Child[]): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    if (child === null) continue;
    node.append(child);
  }
  return node;
}

function button(label: string, enabled: boolean, onClick: () => void): HTMLElement {
  const node = h("button", enabled ? {} : { disabled: "" }, label) as HTMLButtonElement;
  node.addEventListener("click", onClick);
  return node;
}

// -- server commands ---------------------------------------------------------

function sendCommand(kind: "record_actions" | "purchase" | "place_assertion" | "confirm_done", fields: Record<string, string> = {}): void {
  if (!state.conn) return;
  state.vm.enqueue(kind);
  state.conn.send(kind, fields);
}

function connect(url: string, name: string): void {
  const transport = new WebSocketTransport(url);
  const conn = new Connection(transport);
  conn.onAny((msg) => {
    state.vm.apply(msg);
    if (msg.kind === "state_snapshot") {
      const s = state.vm.snapshot;
      if (s) {
        state.selectedTrace = Math.min(state.selectedTrace, Math.max(0, s.traces.length - 1));
        state.status = `round ${s.round}, ${s.phase}`;
      }
    }
    render();
  });
  conn.onClose(() => {
    state.status = "connection closed";
    render();
  });
  state.conn = conn;
  state.status = "waiting for an opponent";
  transport
    .ready()
    .then(() => conn.join(name))
    .catch(() => {
      state.status = "could not reach the relay";
      render();
    });
  render();
}

// -- screens -----------------------------------------------------------------

function joinScreen(): HTMLElement {
  const urlInput = h("input", {
    id: "url",
    value: "ws://localhost:7701",
    size: "28",
  }) as HTMLInputElement;
  const nameInput = h("input", { id: "name", placeholder: "your name", size: "16" }) as HTMLInputElement;
  const go = button("Join duel", true, () => {
    const name = nameInput.value.trim() || "anon";
    connect(urlInput.value.trim(), name);
  });
  return h(
    "section",
    { class: "join card" },
    h("h1", {}, "Mutant Duel"),
    h("p", {}, "Record playthroughs, pin assertions, kill your opponent's mutants."),
    h("label", {}, "Relay ", urlInput),
    h("label", {}, "Name ", nameInput),
    go,
    h("p", { class: "status" }, state.status),
  );
}

function statusBar(): HTMLElement {
  const s = state.vm.snapshot!;
  // one robot per recorded trace; mutant counts stay numeric
  const traceRobots = "\u{1F916}".repeat(Math.min(s.traces.length, 12));
  const meter = (cls: string, value: number, cap: number) => {
    const bar = h("div", { class: `bar ${cls}` });
    const fill = h("div", { class: "fill" });
    fill.style.width = `${Math.max(0, Math.min(100, (100 * value) / Math.max(cap, value, 1)))}%`;
    bar.append(fill);
    return bar;
  };
  return h(
    "header",
    { class: "statusbar" },
    h(
      "div",
      { class: "me" },
      h("strong", {}, `you (p${s.you})`),
      meter("life", s.my.life, 100),
      meter("ap", s.my.ap, 20),
      h(
        "span",
        {},
        `life ${s.my.life}  ap ${s.my.ap}  atk ${s.my.attack}  arm ${s.my.armour}  mutants ${s.my.mutantCount}`,
      ),
      h("span", { title: "recorded traces" }, traceRobots),
    ),
    h(
      "div",
      { class: "mid" },
      h("strong", {}, `round ${s.round}`),
      h("span", {}, s.phase),
      h("span", { class: "clock", title: "phase time left" }, `⏰ ${s.deadlineSeconds.toFixed(1)}s`),
      h("span", { class: "hourglass", title: "playthrough budget" }, `⌛ ${s.my.playthroughTime}`),
    ),
    h(
      "div",
      { class: "opp" },
      h("strong", {}, "opponent"),
      meter("life", s.opponent.life, 100),
      h(
        "span",
        {},
        `life ${s.opponent.life}  atk ${s.opponent.attack}  arm ${s.opponent.armour}  ` +
          `mutants ${s.opponent.mutantCount}  budget ${s.opponent.playthroughTime}`,
      ),
    ),
  );
}

function recordPanel(): HTMLElement {
  const s = state.vm.snapshot!;
  const vm = state.vm;
  const children: Child[] = [h("h2", {}, "Record a playthrough")];
  if (s.my.recorded) {
    children.push(h("p", {}, "Recorded for this round."));
  } else if (state.recording) {
    children.push(
      h("p", {}, `keys: ${state.keystrokes.join(" ") || "(none yet)"}`),
      h("p", { class: "hint" }, `budget ${s.my.playthroughTime} actions; arrows move, up/space jumps`),
    );
    for (const name of ["Left", "Right", "Jump", "NoOp"]) {
      children.push(
        button(name, state.keystrokes.length < s.my.playthroughTime, () => {
          state.keystrokes.push(name);
          render();
        }),
      );
    }
    children.push(
      button("Submit recording", true, () => {
        const actions = state.keystrokes.join(" ") || "-";
        sendCommand("record_actions", { actions });
        state.recording = false;
        state.keystrokes = [];
        render();
      }),
      button("Discard", true, () => {
        state.recording = false;
        state.keystrokes = [];
        render();
      }),
    );
  } else {
    children.push(
      button("Start recording", vm.canRecord(), () => {
        state.recording = true;
        state.keystrokes = [];
        render();
      }),
    );
  }
  return h("section", { class: "card" }, ...children);
}

function storePanel(): HTMLElement {
  const s = state.vm.snapshot!;
  const vm = state.vm;
  const buy = (item: string, label: string, enabled: boolean) =>
    button(label, enabled, () => sendCommand("purchase", { item }));
  return h(
    "section",
    { class: "card" },
    h("h2", {}, "Store"),
    h("p", {}, `action points: ${s.my.ap}`),
    buy("attack", `Attack +1 (${s.prices.upgrade} ap)`, vm.canBuyUpgrade()),
    buy("armour", `Armour +1 (${s.prices.upgrade} ap)`, vm.canBuyUpgrade()),
    buy("playthrough_time", `Budget +tick (${s.prices.upgrade} ap)`, vm.canBuyUpgrade()),
    buy("mutant_count", `Extra mutant (${s.prices.upgrade} ap)`, vm.canBuyUpgrade()),
    buy("construct:IfThen", `IfThen construct (${s.prices.construct} ap)`, vm.canBuyConstruct()),
    h("p", {}, `IfThen constructs in hand: ${s.my.constructs}`),
  );
}

function traceCanvas(level: Level, trace: ParsedTrace, position: number, cell: number): HTMLElement {
  const canvas = h("canvas", {
    width: String(level.width * cell),
    height: String(level.height * cell),
  }) as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (ctx) drawFrame(ctx, level, frameAt(trace, position), cell);
  return canvas;
}

function scrubberPanel(): HTMLElement {
  const s = state.vm.snapshot!;
  if (s.traces.length === 0) {
    return h("section", { class: "card" }, h("h2", {}, "Replay"), h("p", {}, "No recording yet."));
  }
  const trace = s.traces[state.selectedTrace]!;
  const level = parseLevel(s.levelText);
  const pos = clampPosition(trace, state.scrubPos);
  const frame = frameAt(trace, pos);
  const picker = h("select", {}) as HTMLSelectElement;
  s.traces.forEach((_, i) => {
    const opt = h("option", { value: String(i) }, `trace ${i}`) as HTMLOptionElement;
    if (i === state.selectedTrace) opt.selected = true;
    picker.append(opt);
  });
  picker.addEventListener("change", () => {
    state.selectedTrace = Number(picker.value);
    state.scrubPos = 0;
    state.windowAnchor = null;
    render();
  });
  const slider = h("input", {
    type: "range",
    min: "0",
    max: String(trace.length),
    value: String(pos),
  }) as HTMLInputElement;
  slider.addEventListener("input", () => {
    state.scrubPos = Number(slider.value);
    render();
  });
  const pinAt = button("Pin AT here", true, () => {
    state.editor.setScope(scopeFromSlider(trace, pos));
    render();
  });
  const anchor = button(
    state.windowAnchor === null ? "Window from here" : `Window ${state.windowAnchor} .. here`,
    true,
    () => {
      if (state.windowAnchor === null) {
        state.windowAnchor = pos;
      } else {
        state.editor.setScope(scopeFromSlider(trace, state.windowAnchor, pos));
        state.windowAnchor = null;
      }
      render();
    },
  );
  return h(
    "section",
    { class: "card" },
    h("h2", {}, "Replay"),
    picker,
    traceCanvas(level, trace, pos, 24),
    slider,
    h("p", {}, `step ${pos}/${trace.length}  tick ${frame.tick}  score ${frame.score}  over ${frame.gameOver ? "yes" : "no"}`),
    pinAt,
    anchor,
  );
}

function editorPanel(): HTMLElement {
  const s = state.vm.snapshot!;
  const vm = state.vm;
  const ed = state.editor;
  const trace = s.traces[state.selectedTrace];
  const actors: readonly ActorName[] = trace ? actorMenu(trace) : [];

  const pickCond = (kind: ConditionKind) =>
    button(kind, true, () => {
      ed.pickCondition(kind);
      render();
    });
  const pickOut = (kind: OutcomeKind) =>
    button(kind, true, () => {
      ed.pickOutcome(kind);
      render();
    });

  const actorSelect = (current: ActorName | null, apply: (a: ActorName) => void) => {
    const sel = h("select", {}) as HTMLSelectElement;
    sel.append(h("option", { value: "" }, "actor?"));
    for (const a of actors) {
      const opt = h("option", { value: a }, a) as HTMLOptionElement;
      if (a === current) opt.selected = true;
      sel.append(opt);
    }
    sel.addEventListener("change", () => {
      if (sel.value) {
        apply(sel.value as ActorName);
        render();
      }
    });
    return sel;
  };
  const attrSelect = (current: AttrName | null, apply: (a: AttrName) => void) => {
    const sel = h("select", {}) as HTMLSelectElement;
    sel.append(h("option", { value: "" }, "attr?"));
    for (const a of attrMenu()) {
      const opt = h("option", { value: a }, a) as HTMLOptionElement;
      if (a === current) opt.selected = true;
      sel.append(opt);
    }
    sel.addEventListener("change", () => {
      if (sel.value) {
        apply(sel.value as AttrName);
        render();
      }
    });
    return sel;
  };
  const opSelect = (current: OpSymbol | null, apply: (o: OpSymbol) => void) => {
    const sel = h("select", {}) as HTMLSelectElement;
    sel.append(h("option", { value: "" }, "op?"));
    for (const o of OP_SYMBOLS) {
      const opt = h("option", { value: o }, o) as HTMLOptionElement;
      if (o === current) opt.selected = true;
      sel.append(opt);
    }
    sel.addEventListener("change", () => {
      if (sel.value) {
        apply(sel.value as OpSymbol);
        render();
      }
    });
    return sel;
  };
  const valueInput = (current: number | null, apply: (v: number) => void) => {
    const input = h("input", {
      type: "number",
      value: current === null ? "" : String(current),
      size: "5",
    }) as HTMLInputElement;
    input.addEventListener("change", () => {
      const v = Number(input.value);
      if (Number.isFinite(v)) {
        apply(Math.trunc(v));
        render();
      }
    });
    return input;
  };

  const condRow = h("div", { class: "slot" }, h("span", {}, "IF "));
  if (!ed.condition) {
    condRow.append(pickCond("Touching"), pickCond("Compare"));
  } else if (ed.condition.kind === "Touching") {
    const c = ed.condition;
    condRow.append(
      "Touching(",
      actorSelect(c.a, (a) => ed.setConditionActor("a", a)),
      ", ",
      actorSelect(c.b, (a) => ed.setConditionActor("b", a)),
      ")",
    );
  } else {
    const c = ed.condition;
    condRow.append(
      "Compare(Attr(",
      actorSelect(c.actor, (a) => ed.setConditionActor("a", a)),
      ", ",
      attrSelect(c.attr, (a) => ed.setConditionAttr(a)),
      "), ",
      opSelect(c.op, (o) => ed.setConditionOp(o)),
      ", ",
      valueInput(c.value, (v) => ed.setConditionValue(v)),
      ")",
    );
  }

  const outRow = h("div", { class: "slot" }, h("span", {}, "THEN "));
  if (!ed.outcome) {
    outRow.append(pickOut("GameOver"), pickOut("ScoreIncreases"), pickOut("AttributeIs"));
  } else if (ed.outcome.kind === "AttributeIs") {
    const o = ed.outcome;
    outRow.append(
      "AttributeIs(Attr(",
      actorSelect(o.actor, (a) => ed.setOutcomeActor(a)),
      ", ",
      attrSelect(o.attr, (a) => ed.setOutcomeAttr(a)),
      "), ",
      opSelect(o.op, (op) => ed.setOutcomeOp(op)),
      ", ",
      valueInput(o.value, (v) => ed.setOutcomeValue(v)),
      ")",
    );
  } else {
    outRow.append(h("span", {}, ed.outcome.kind));
  }

  const scopeLabel =
    ed.scope.type === "global"
      ? "GLOBAL"
      : ed.scope.type === "at"
        ? `AT ${ed.scope.t}`
        : `WINDOW ${ed.scope.t1} ${ed.scope.t2}`;
  const scopeRow = h(
    "div",
    { class: "slot" },
    h("span", {}, `scope: ${scopeLabel} `),
    button("Global", true, () => {
      ed.setScope({ type: "global" } as Scope);
      render();
    }),
    h("span", { class: "hint" }, " (pin AT or WINDOW from the replay slider)"),
  );

  const palette = h(
    "div",
    { class: "palette" },
    ...PALETTE_CATEGORIES.map((cat) => h("span", { class: `chip cat-${cat}` }, cat)),
  );

  const preview = ed.complete() ? ed.emitText() : "(fill every slot)";
  const place = button("Place assertion", vm.canPlaceAssertion() && ed.complete(), () => {
    sendCommand("place_assertion", {
      trace: String(state.selectedTrace),
      assertion: ed.emitText(),
    });
    ed.clear();
    render();
  });
  const clear = button("Clear", true, () => {
    ed.clear();
    render();
  });

  return h(
    "section",
    { class: "card" },
    h("h2", {}, "Assertion editor"),
    palette,
    scopeRow,
    condRow,
    outRow,
    h("pre", { class: ed.complete() ? "preview" : "preview incomplete" }, preview),
    place,
    clear,
  );
}

function assertionsPanel(): HTMLElement {
  const s = state.vm.snapshot!;
  const items = s.assertions.map((a, i) =>
    h("li", {}, h("code", {}, a.text), h("span", { class: "hint" }, ` on trace ${a.sourceTrace}`), h("span", { class: "idx" }, ` #${i}`)),
  );
  return h(
    "section",
    { class: "card" },
    h("h2", {}, `Your assertions (${s.assertions.length})`),
    items.length > 0 ? h("ul", {}, ...items) : h("p", {}, "None placed yet."),
  );
}

function errorsPanel(): HTMLElement | null {
  const errs = state.vm.errors.slice(-3);
  if (errs.length === 0) return null;
  return h(
    "section",
    { class: "card errors" },
    ...errs.map((e) => h("p", {}, `${e.code}: ${e.detail}`)),
  );
}

function planningScreen(): HTMLElement {
  const vm = state.vm;
  const confirm = button("Confirm: ready for execution", vm.canConfirm(), () => {
    sendCommand("confirm_done");
  });
  return h(
    "main",
    {},
    statusBar(),
    h(
      "div",
      { class: "columns" },
      h("div", { class: "col" }, recordPanel(), storePanel(), assertionsPanel()),
      h("div", { class: "col" }, scrubberPanel(), editorPanel()),
    ),
    errorsPanel(),
    h("footer", {}, confirm, h("span", { class: "status" }, state.status)),
  );
}

function executionScreen(): HTMLElement {
  const s = state.vm.snapshot!;
  const report = state.vm.report;
  const parts: Child[] = [statusBar()];
  if (!report) {
    parts.push(h("p", { class: "status" }, "Executing the opposing suite..."));
  } else {
    parts.push(
      h(
        "section",
        { class: "card" },
        h("h2", {}, `Round ${report.round} report`),
        h("p", {}, `damage taken ${report.damage}  ap award ${report.award}`),
        h("p", {}, `your life ${report.myLife}  opponent life ${report.oppLife}`),
      ),
    );
    const cards = report.cards.map((card, i) => {
      const mark = card.killed ? "✔" : "✖";
      const cls = card.killed ? "card mutant killed" : "card mutant survived";
      const node = h(
        "div",
        { class: cls + (i === state.selectedCard ? " selected" : "") },
        h("p", {}, `\u{1F916} mutant ${card.mid} ${mark}`),
        card.killingAssertion ? h("code", {}, card.killingAssertion) : h("p", {}, "survived your suite"),
      );
      node.addEventListener("click", () => {
        state.selectedCard = i;
        state.cardScrubPos = 0;
        render();
      });
      return node;
    });
    parts.push(h("div", { class: "cardrow" }, ...cards));
    const card = report.cards[state.selectedCard];
    if (card && card.traceBlob && card.traceBlob !== "-") {
      try {
        const trace = parseTrace(card.traceBlob);
        if (trace) {
          const level = parseLevel(s.levelText);
          const markers = parseMarkers(card.markCsv);
          const pos = clampPosition(trace, state.cardScrubPos);
          const slider = h("input", {
            type: "range",
            min: "0",
            max: String(trace.length),
            value: String(pos),
          }) as HTMLInputElement;
          slider.addEventListener("input", () => {
            state.cardScrubPos = Number(slider.value);
            render();
          });
          const hot = pos > 0 && markers.has(pos - 1);
          parts.push(
            h(
              "section",
              { class: "card" },
              h("h2", {}, `Mutant ${card.mid} replay`),
              traceCanvas(level, trace, pos, 24),
              slider,
              h("p", {}, `step ${pos}/${trace.length} ${hot ? "\u{1F4A3} mutated step ran here" : ""}`),
            ),
          );
        }
      } catch {
        parts.push(h("p", { class: "status" }, "replay unavailable"));
      }
    }
  }
  if (s.phase === "Finished") {
    const verdict = s.drawn ? "Draw." : s.winner === s.you ? "You win!" : "You lose.";
    parts.push(h("section", { class: "card finale" }, h("h2", {}, verdict)));
  }
  parts.push(errorsPanel());
  return h("main", {}, ...parts);
}

function render(): void {
  const root = document.getElementById("app");
  if (!root) return;
  root.replaceChildren();
  const s = state.vm.snapshot;
  if (!state.conn || !s) {
    root.append(joinScreen());
  } else if (s.phase === "Planning") {
    root.append(planningScreen());
  } else {
    root.append(executionScreen());
  }
}

document.addEventListener("keydown", (event) => {
  if (!state.recording) return;
  const action = ACTION_KEYS[event.key];
  if (!action) return;
  const s = state.vm.snapshot;
  if (s && state.keystrokes.length >= s.my.playthroughTime) return;
  event.preventDefault();
  state.keystrokes.push(action);
  render();
});

render();

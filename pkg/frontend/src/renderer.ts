/**
 * Playfield rendering.
 *
 * tileGrid is the pure core: it projects one replay frame onto the
 * level as a grid of tile codes, which both the canvas painter and the
 * tests consume. World y grows upward, so screen row 0 is the top of
 * the level.
 */

import type { Frame, Level } from "./trace.js";

export type Tile = "empty" | "solid" | "player" | "coin" | "bomb" | "goal" | "actor";

const ACTOR_TILES: ReadonlySet<string> = new Set(["player", "coin", "bomb", "goal"]);

export function tileGrid(level: Level, frame: Frame): Tile[][] {
  const grid: Tile[][] = [];
  for (let row = 0; row < level.height; row += 1) {
    const line: Tile[] = [];
    for (let col = 0; col < level.width; col += 1) {
      const y = level.height - 1 - row;
      line.push(level.solids.has(`${col},${y}`) ? "solid" : "empty");
    }
    grid.push(line);
  }
  for (const actor of frame.actors) {
    if (!actor.alive) continue;
    const row = level.height - 1 - actor.y;
    if (row < 0 || row >= level.height) continue;
    if (actor.x < 0 || actor.x >= level.width) continue;
    const rowTiles = grid[row]!;
    rowTiles[actor.x] = ACTOR_TILES.has(actor.kind) ? (actor.kind as Tile) : "actor";
  }
  return grid;
}

/** Compact text rendering for logs and tests. */
export function asciiFrame(level: Level, frame: Frame): string[] {
  const glyphs: Record<Tile, string> = {
    empty: ".",
    solid: "#",
    player: "P",
    coin: "c",
    bomb: "B",
    goal: "G",
    actor: "?",
  };
  return tileGrid(level, frame).map((row) => row.map((t) => glyphs[t]).join(""));
}

const TILE_COLORS: Record<Tile, string> = {
  empty: "#101418",
  solid: "#4a5568",
  player: "#63d471",
  coin: "#f6c945",
  bomb: "#e4572e",
  goal: "#5aa9e6",
  actor: "#b07bd4",
};

export function drawFrame(
  ctx: CanvasRenderingContext2D,
  level: Level,
  frame: Frame,
  cell: number,
): void {
  const grid = tileGrid(level, frame);
  ctx.fillStyle = TILE_COLORS.empty;
  ctx.fillRect(0, 0, level.width * cell, level.height * cell);
  for (let row = 0; row < grid.length; row += 1) {
    const tiles = grid[row]!;
    for (let col = 0; col < tiles.length; col += 1) {
      const tile = tiles[col]!;
      if (tile === "empty") continue;
      ctx.fillStyle = TILE_COLORS[tile];
      if (tile === "solid") {
        ctx.fillRect(col * cell, row * cell, cell, cell);
      } else {
        const pad = Math.max(1, Math.floor(cell / 8));
        ctx.fillRect(col * cell + pad, row * cell + pad, cell - 2 * pad, cell - 2 * pad);
      }
    }
  }
}

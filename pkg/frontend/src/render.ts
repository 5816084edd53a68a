/** Scene building and canvas drawing.
 *
 * buildRenderList is pure (and what the tests assert on); drawScene turns the
 * list into canvas calls, including the class pictograms and emphasis halos.
 */

import type { Positions, ServerView } from "./api.js";
import type { Camera } from "./camera.js";

export interface NodeCommand {
  kind: "node";
  key: string;
  x: number;
  y: number;
  radius: number;
  fill: string;
  pictogram: string;
  emphasis: boolean;
  label: string;
}

export interface EdgeCommand {
  kind: "edge";
  a: string;
  b: string;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  style: string;
  confidence: number;
  width: number;
}

export type DrawCommand = NodeCommand | EdgeCommand;

const EDGE_DASHES: Record<string, number[]> = {
  solid: [],
  dashed: [6, 4],
  dotted: [2, 3],
};

export function buildRenderList(view: ServerView, positions: Positions, camera: Camera): DrawCommand[] {
  const commands: DrawCommand[] = [];
  const screen = new Map<string, [number, number]>();
  for (const node of view.nodes) {
    const position = positions[node.key];
    if (position) screen.set(node.key, camera.worldToScreen(position[0], position[1]));
  }
  for (const edge of view.edges) {
    const from = screen.get(edge.a);
    const to = screen.get(edge.b);
    if (!from || !to) continue;
    commands.push({
      kind: "edge",
      a: edge.a,
      b: edge.b,
      x1: from[0],
      y1: from[1],
      x2: to[0],
      y2: to[1],
      style: edge.style,
      confidence: edge.confidence,
      width: Math.min(1 + Math.log2(edge.weight + 1), 4),
    });
  }
  for (const node of view.nodes) {
    const at = screen.get(node.key);
    if (!at) continue;
    commands.push({
      kind: "node",
      key: node.key,
      x: at[0],
      y: at[1],
      radius: node.radius * camera.zoom * 0.25,
      fill: node.fill,
      pictogram: node.pictogram,
      emphasis: node.emphasis,
      label: node.label,
    });
  }
  return commands;
}

export function countNodes(commands: DrawCommand[]): number {
  return commands.filter((c) => c.kind === "node").length;
}

export function countEdges(commands: DrawCommand[]): number {
  return commands.filter((c) => c.kind === "edge").length;
}

/** Topmost node circle under a screen point, if any. */
export function hitTestNode(commands: DrawCommand[], sx: number, sy: number): string | null {
  for (let i = commands.length - 1; i >= 0; i--) {
    const command = commands[i];
    if (command.kind !== "node") continue;
    const dx = sx - command.x;
    const dy = sy - command.y;
    if (dx * dx + dy * dy <= (command.radius + 2) ** 2) return command.key;
  }
  return null;
}

/** Edge whose segment passes within `slack` px of a screen point. */
export function hitTestEdge(
  commands: DrawCommand[],
  sx: number,
  sy: number,
  slack = 4
): { a: string; b: string } | null {
  for (let i = commands.length - 1; i >= 0; i--) {
    const command = commands[i];
    if (command.kind !== "edge") continue;
    const vx = command.x2 - command.x1;
    const vy = command.y2 - command.y1;
    const lengthSq = vx * vx + vy * vy;
    const t = lengthSq === 0 ? 0 : Math.max(0, Math.min(1, ((sx - command.x1) * vx + (sy - command.y1) * vy) / lengthSq));
    const px = command.x1 + t * vx;
    const py = command.y1 + t * vy;
    const dx = sx - px;
    const dy = sy - py;
    if (dx * dx + dy * dy <= slack * slack) return { a: command.a, b: command.b };
  }
  return null;
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  commands: DrawCommand[],
  width: number,
  height: number,
  options: { selectedEdge?: { a: string; b: string } | null } = {}
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, width, height);
  for (const command of commands) {
    if (command.kind !== "edge") continue;
    const selected =
      options.selectedEdge && options.selectedEdge.a === command.a && options.selectedEdge.b === command.b;
    ctx.beginPath();
    ctx.setLineDash(EDGE_DASHES[command.style] ?? []);
    ctx.lineWidth = selected ? command.width + 1.5 : command.width;
    const alpha = 0.35 + 0.65 * command.confidence;
    ctx.strokeStyle = selected ? "#D81B60" : `rgba(110, 110, 110, ${alpha.toFixed(3)})`;
    ctx.moveTo(command.x1, command.y1);
    ctx.lineTo(command.x2, command.y2);
    ctx.stroke();
  }
  ctx.setLineDash([]);
  for (const command of commands) {
    if (command.kind !== "node") continue;
    if (command.emphasis) {
      ctx.beginPath();
      ctx.arc(command.x, command.y, command.radius + 4, 0, Math.PI * 2);
      ctx.strokeStyle = "#D81B60";
      ctx.lineWidth = 2;
      ctx.stroke();
    }
    ctx.beginPath();
    ctx.arc(command.x, command.y, command.radius, 0, Math.PI * 2);
    ctx.fillStyle = command.fill;
    ctx.fill();
    ctx.strokeStyle = "rgba(0,0,0,0.25)";
    ctx.lineWidth = 1;
    ctx.stroke();
    drawPictogram(ctx, command);
    if (command.radius >= 8) {
      ctx.fillStyle = "#333";
      ctx.font = "11px sans-serif";
      ctx.textAlign = "center";
      ctx.fillText(command.label, command.x, command.y + command.radius + 12);
    }
  }
}

function drawPictogram(ctx: CanvasRenderingContext2D, node: NodeCommand): void {
  const r = node.radius;
  if (r < 5) return;
  const s = r * 0.55;
  ctx.save();
  ctx.translate(node.x, node.y);
  ctx.strokeStyle = "rgba(255,255,255,0.95)";
  ctx.fillStyle = "rgba(255,255,255,0.95)";
  ctx.lineWidth = Math.max(1, r * 0.12);
  switch (node.pictogram) {
    case "document":
      ctx.strokeRect(-s * 0.7, -s, s * 1.4, s * 2);
      ctx.beginPath();
      ctx.moveTo(-s * 0.4, -s * 0.45);
      ctx.lineTo(s * 0.4, -s * 0.45);
      ctx.moveTo(-s * 0.4, 0);
      ctx.lineTo(s * 0.4, 0);
      ctx.moveTo(-s * 0.4, s * 0.45);
      ctx.lineTo(s * 0.4, s * 0.45);
      ctx.stroke();
      break;
    case "person":
      ctx.beginPath();
      ctx.arc(0, -s * 0.45, s * 0.42, 0, Math.PI * 2);
      ctx.fill();
      ctx.beginPath();
      ctx.arc(0, s * 0.75, s * 0.85, Math.PI, 2 * Math.PI);
      ctx.fill();
      break;
    case "location":
      ctx.beginPath();
      ctx.arc(0, -s * 0.35, s * 0.5, Math.PI * 0.95, Math.PI * 2.05);
      ctx.lineTo(0, s);
      ctx.closePath();
      ctx.fill();
      break;
    case "organization":
      ctx.strokeRect(-s * 0.8, -s * 0.9, s * 1.6, s * 1.8);
      ctx.beginPath();
      for (const row of [-0.45, 0.05, 0.55]) {
        ctx.moveTo(-s * 0.45, s * row);
        ctx.lineTo(s * 0.45, s * row);
      }
      ctx.stroke();
      break;
    default: // misc
      ctx.beginPath();
      ctx.moveTo(0, -s);
      ctx.lineTo(s, 0);
      ctx.lineTo(0, s);
      ctx.lineTo(-s, 0);
      ctx.closePath();
      ctx.fill();
  }
  ctx.restore();
}

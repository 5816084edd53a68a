/** Overview inset: downscaled node positions plus the camera's viewport box. */

import type { Positions } from "./api.js";
import type { Camera } from "./camera.js";

export interface MinimapTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
  width: number;
  height: number;
}

export function minimapTransform(
  positions: Positions,
  width: number,
  height: number,
  pad = 8
): MinimapTransform {
  const xs = Object.values(positions).map((p) => p[0]);
  const ys = Object.values(positions).map((p) => p[1]);
  if (xs.length === 0) {
    return { scale: 1, offsetX: width / 2, offsetY: height / 2, width, height };
  }
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  const scale = Math.min((width - 2 * pad) / spanX, (height - 2 * pad) / spanY);
  return {
    scale,
    offsetX: width / 2 - scale * (minX + maxX) / 2,
    offsetY: height / 2 - scale * (minY + maxY) / 2,
    width,
    height,
  };
}

export function worldToMinimap(t: MinimapTransform, x: number, y: number): [number, number] {
  return [t.scale * x + t.offsetX, t.scale * y + t.offsetY];
}

export function minimapToWorld(t: MinimapTransform, mx: number, my: number): [number, number] {
  return [(mx - t.offsetX) / t.scale, (my - t.offsetY) / t.scale];
}

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

/** The camera's visible world box in minimap pixels, clamped to the inset. */
export function viewportRect(camera: Camera, t: MinimapTransform): Rect {
  const box = camera.visibleWorldBox();
  const [x1, y1] = worldToMinimap(t, box.minX, box.minY);
  const [x2, y2] = worldToMinimap(t, box.maxX, box.maxY);
  const x = Math.max(0, Math.min(x1, t.width));
  const y = Math.max(0, Math.min(y1, t.height));
  const right = Math.max(0, Math.min(x2, t.width));
  const bottom = Math.max(0, Math.min(y2, t.height));
  return { x, y, w: Math.max(0, right - x), h: Math.max(0, bottom - y) };
}

/** World <-> screen transform and contextual-zoom helpers. */

import type { Positions, ServerView } from "./api.js";

export interface Box {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export interface CameraSettings {
  centerX: number;
  centerY: number;
  zoom: number;
}

export class Camera {
  centerX = 0;
  centerY = 0;
  zoom = 4;

  constructor(public viewportWidth: number, public viewportHeight: number) {}

  settings(): CameraSettings {
    return { centerX: this.centerX, centerY: this.centerY, zoom: this.zoom };
  }

  apply(settings: CameraSettings): void {
    this.centerX = settings.centerX;
    this.centerY = settings.centerY;
    this.zoom = settings.zoom;
  }

  worldToScreen(x: number, y: number): [number, number] {
    return [
      (x - this.centerX) * this.zoom + this.viewportWidth / 2,
      (y - this.centerY) * this.zoom + this.viewportHeight / 2,
    ];
  }

  screenToWorld(sx: number, sy: number): [number, number] {
    return [
      (sx - this.viewportWidth / 2) / this.zoom + this.centerX,
      (sy - this.viewportHeight / 2) / this.zoom + this.centerY,
    ];
  }

  visibleWorldBox(): Box {
    const [minX, minY] = this.screenToWorld(0, 0);
    const [maxX, maxY] = this.screenToWorld(this.viewportWidth, this.viewportHeight);
    return { minX, minY, maxX, maxY };
  }

  /** Settings that frame `box` with a fractional margin on each side. */
  fitBox(box: Box, marginFraction = 0.1): CameraSettings {
    const width = Math.max(box.maxX - box.minX, 1e-9) * (1 + 2 * marginFraction);
    const height = Math.max(box.maxY - box.minY, 1e-9) * (1 + 2 * marginFraction);
    const zoom = Math.min(this.viewportWidth / width, this.viewportHeight / height, 40);
    return {
      centerX: (box.minX + box.maxX) / 2,
      centerY: (box.minY + box.maxY) / 2,
      zoom,
    };
  }
}

export function easeInOutQuad(t: number): number {
  const clamped = Math.min(1, Math.max(0, t));
  return clamped < 0.5 ? 2 * clamped * clamped : 1 - (-2 * clamped + 2) ** 2 / 2;
}

export function tweenSettings(from: CameraSettings, to: CameraSettings, t: number): CameraSettings {
  const k = easeInOutQuad(t);
  return {
    centerX: from.centerX + (to.centerX - from.centerX) * k,
    centerY: from.centerY + (to.centerY - from.centerY) * k,
    zoom: from.zoom + (to.zoom - from.zoom) * k,
  };
}

export const CONTEXT_ZOOM_MS = 300;

/** Bounding box over a node and its visible neighbors, circle extents included. */
export function neighborhoodBox(key: string, view: ServerView, positions: Positions): Box | null {
  const members = new Set([key]);
  for (const edge of view.edges) {
    if (edge.a === key) members.add(edge.b);
    if (edge.b === key) members.add(edge.a);
  }
  const radii = new Map(view.nodes.map((n) => [n.key, n.radius]));
  let box: Box | null = null;
  for (const member of members) {
    const position = positions[member];
    if (!position || !radii.has(member)) continue;
    const radius = radii.get(member)!;
    const candidate = {
      minX: position[0] - radius,
      minY: position[1] - radius,
      maxX: position[0] + radius,
      maxY: position[1] + radius,
    };
    box = box
      ? {
          minX: Math.min(box.minX, candidate.minX),
          minY: Math.min(box.minY, candidate.minY),
          maxX: Math.max(box.maxX, candidate.maxX),
          maxY: Math.max(box.maxY, candidate.maxY),
        }
      : candidate;
  }
  return box;
}

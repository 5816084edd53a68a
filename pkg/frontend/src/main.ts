/** Browser entry point: wires the canvas, minimap, toolbar, and panels. */

import { ApiClient } from "./api.js";
import {
  Camera,
  CONTEXT_ZOOM_MS,
  neighborhoodBox,
  tweenSettings,
  type CameraSettings,
} from "./camera.js";
import { minimapTransform, minimapToWorld, viewportRect, worldToMinimap } from "./minimap.js";
import { canvasPngDataUrl, downloadDataUrl, downloadText } from "./png.js";
import { buildRenderList, drawScene, hitTestEdge, hitTestNode, type DrawCommand } from "./render.js";
import {
  ALL_CLASSES,
  ALL_EDGE_KINDS,
  ALL_NODE_KINDS,
  SessionController,
  splitKey,
} from "./state.js";

const api = new ApiClient("");
const controller = new SessionController(api);

const canvas = document.getElementById("graph") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const minimapCanvas = document.getElementById("minimap") as HTMLCanvasElement;
const minimapCtx = minimapCanvas.getContext("2d")!;
const statusLine = document.getElementById("status")!;

const camera = new Camera(canvas.width, canvas.height);
let commands: DrawCommand[] = [];
let dirty = true;
let animation: { from: CameraSettings; to: CameraSettings; startedAt: number } | null = null;

controller.onChange = () => {
  dirty = true;
  syncPanels();
};

function requestZoomTo(key: string): void {
  if (!controller.view) return;
  const box = neighborhoodBox(key, controller.view, controller.positions);
  if (!box) return;
  animation = { from: camera.settings(), to: camera.fitBox(box, 0.1), startedAt: performance.now() };
}

function frame(now: number): void {
  if (animation) {
    const t = (now - animation.startedAt) / CONTEXT_ZOOM_MS;
    camera.apply(tweenSettings(animation.from, animation.to, t));
    if (t >= 1) animation = null;
    dirty = true;
  }
  if (controller.zoomRequest) {
    requestZoomTo(controller.zoomRequest);
    controller.zoomRequest = null;
  }
  if (dirty && controller.view) {
    commands = buildRenderList(controller.view, controller.positions, camera);
    drawScene(ctx, commands, canvas.width, canvas.height, { selectedEdge: controller.selectedEdge });
    drawMinimap();
    dirty = false;
  }
  requestAnimationFrame(frame);
}

function drawMinimap(): void {
  const t = minimapTransform(controller.positions, minimapCanvas.width, minimapCanvas.height);
  minimapCtx.clearRect(0, 0, t.width, t.height);
  minimapCtx.fillStyle = "rgba(255,255,255,0.9)";
  minimapCtx.fillRect(0, 0, t.width, t.height);
  minimapCtx.fillStyle = "#78909C";
  for (const [x, y] of Object.values(controller.positions)) {
    const [mx, my] = worldToMinimap(t, x, y);
    minimapCtx.fillRect(mx - 1, my - 1, 2, 2);
  }
  const rect = viewportRect(camera, t);
  minimapCtx.strokeStyle = "#D81B60";
  minimapCtx.lineWidth = 1.5;
  minimapCtx.strokeRect(rect.x, rect.y, rect.w, rect.h);
}

// --- pointer interaction on the main canvas ---

let dragging: { key: string; moved: boolean } | null = null;
let panning: { startX: number; startY: number; centerX: number; centerY: number } | null = null;

canvas.addEventListener("mousedown", (event) => {
  const { offsetX, offsetY } = event;
  const nodeKey = hitTestNode(commands, offsetX, offsetY);
  if (nodeKey) {
    dragging = { key: nodeKey, moved: false };
  } else {
    panning = { startX: offsetX, startY: offsetY, centerX: camera.centerX, centerY: camera.centerY };
  }
});

canvas.addEventListener("mousemove", (event) => {
  if (dragging) {
    dragging.moved = true;
    const world = camera.screenToWorld(event.offsetX, event.offsetY);
    void controller.dragNodeTo(dragging.key, world);
  } else if (panning) {
    camera.centerX = panning.centerX - (event.offsetX - panning.startX) / camera.zoom;
    camera.centerY = panning.centerY - (event.offsetY - panning.startY) / camera.zoom;
    dirty = true;
  }
});

canvas.addEventListener("mouseup", (event) => {
  if (dragging) {
    if (!dragging.moved) {
      void controller.selectNode(dragging.key);
    }
    dragging = null;
    return;
  }
  if (panning) {
    const wasClick = Math.abs(event.offsetX - panning.startX) < 3 && Math.abs(event.offsetY - panning.startY) < 3;
    panning = null;
    if (wasClick) {
      const edge = hitTestEdge(commands, event.offsetX, event.offsetY);
      if (edge) {
        const full = controller.view?.edges.find((e) => e.a === edge.a && e.b === edge.b);
        if (full) controller.selectEdge({ kind: full.kind, a: full.a, b: full.b });
      } else {
        void controller.selectNode(null);
        controller.selectEdge(null);
      }
    }
  }
});

canvas.addEventListener("wheel", (event) => {
  event.preventDefault();
  const factor = event.deltaY < 0 ? 1.15 : 1 / 1.15;
  const [wx, wy] = camera.screenToWorld(event.offsetX, event.offsetY);
  camera.zoom = Math.min(40, Math.max(0.05, camera.zoom * factor));
  const [sx, sy] = camera.worldToScreen(wx, wy);
  camera.centerX += (sx - event.offsetX) / camera.zoom;
  camera.centerY += (sy - event.offsetY) / camera.zoom;
  dirty = true;
});

minimapCanvas.addEventListener("mousedown", (event) => {
  const t = minimapTransform(controller.positions, minimapCanvas.width, minimapCanvas.height);
  const [wx, wy] = minimapToWorld(t, event.offsetX, event.offsetY);
  camera.centerX = wx;
  camera.centerY = wy;
  dirty = true;
});

window.addEventListener("keydown", (event) => {
  const target = event.target as HTMLElement;
  if (target.tagName === "INPUT" || target.tagName === "SELECT" || target.tagName === "TEXTAREA") return;
  const interesting = ["Delete", "Backspace", "z", "Z", "v", "V", "f", "F"];
  if (!interesting.includes(event.key)) return;
  event.preventDefault();
  void controller.handleKey(event.key, { ctrl: event.ctrlKey || event.metaKey, shift: event.shiftKey });
});

// --- toolbar ---

const importInput = document.getElementById("import-file") as HTMLInputElement;
importInput.addEventListener("change", async () => {
  const file = importInput.files?.[0];
  if (!file) return;
  const payload = JSON.parse(await file.text());
  await controller.importFile(payload);
  buildFilterPanel();
  fitAll();
});

document.getElementById("export-json")!.addEventListener("click", async () => {
  downloadText(await controller.exportJson(), "graph.json");
});

document.getElementById("export-png")!.addEventListener("click", () => {
  downloadDataUrl(canvasPngDataUrl(canvas), "graph.png");
});

document.getElementById("toggle-view")!.addEventListener("click", () => void controller.toggleView());
document.getElementById("toggle-scheme")!.addEventListener("click", () => void controller.toggleScheme());
document.getElementById("layout-start")!.addEventListener("click", () => void controller.startLayout(2000));
document.getElementById("layout-stop")!.addEventListener("click", () => void controller.stopLayout());

const searchInput = document.getElementById("search") as HTMLInputElement;
const searchResults = document.getElementById("search-results")!;
searchInput.addEventListener("input", () => void controller.searchFor(searchInput.value));

// --- node actions panel ---

document.getElementById("action-zoom")!.addEventListener("click", () => {
  if (controller.selection) requestZoomTo(controller.selection);
});
document.getElementById("action-focus")!.addEventListener("click", () => void controller.toggleFocus());
document.getElementById("action-delete")!.addEventListener("click", () => void controller.deleteSelected());

// --- node editor ---

const editorTerm = document.getElementById("edit-term") as HTMLInputElement;
const editorClass = document.getElementById("edit-class") as HTMLSelectElement;
document.getElementById("edit-save")!.addEventListener("click", () => {
  if (!controller.selection) return;
  void controller.saveEdit(controller.selection, {
    term: editorTerm.value,
    entityClass: editorClass.value,
  });
});

// --- rule filter panel ---

const filterPanel = document.getElementById("filters")!;

function buildFilterPanel(): void {
  const groups: Array<[string, string[], Set<string>]> = [
    ["node kinds", ALL_NODE_KINDS, controller.rule.nodeKinds],
    ["entity classes", ALL_CLASSES, controller.rule.entityClasses],
    ["edge kinds", ALL_EDGE_KINDS, controller.rule.edgeKinds],
  ];
  filterPanel.innerHTML = "";
  for (const [label, values, active] of groups) {
    const section = document.createElement("fieldset");
    const legend = document.createElement("legend");
    legend.textContent = label;
    section.appendChild(legend);
    for (const value of values) {
      const row = document.createElement("label");
      const box = document.createElement("input");
      box.type = "checkbox";
      box.checked = active.has(value);
      box.addEventListener("change", () => {
        if (box.checked) active.add(value);
        else active.delete(value);
        void controller.setRuleFilter(controller.rule);
      });
      row.appendChild(box);
      row.appendChild(document.createTextNode(value));
      section.appendChild(row);
    }
    filterPanel.appendChild(section);
  }
}

function syncPanels(): void {
  const view = controller.view;
  statusLine.textContent = view
    ? `session ${controller.sessionId} | ${view.mode} view | revision ${view.revision} | ` +
      `${view.nodes.length} nodes, ${view.edges.length} edges` +
      (controller.layoutRunning ? " | layout running" : "") +
      (controller.lastError ? ` | ${controller.lastError}` : "")
    : "import a corpus JSON to begin";
  const selected = view?.nodes.find((n) => n.key === controller.selection) ?? null;
  const editor = document.getElementById("editor")!;
  editor.classList.toggle("hidden", selected === null);
  if (selected) {
    const [kind] = splitKey(selected.key);
    (document.getElementById("edit-key") as HTMLElement).textContent = selected.key;
    if (document.activeElement !== editorTerm) editorTerm.value = selected.label;
    editorTerm.disabled = kind !== "entity";
    editorClass.disabled = kind === "document";
    if (selected.class) editorClass.value = selected.class;
  }
  searchResults.innerHTML = "";
  for (const hit of controller.searchHits) {
    const item = document.createElement("li");
    const label = view?.nodes.find((n) => n.key === hit.key)?.label ?? "";
    item.textContent = `${hit.key} ${label} (${hit.matchKind})`;
    item.addEventListener("click", () => void controller.chooseHit(hit.key));
    searchResults.appendChild(item);
  }
}

function fitAll(): void {
  const xs = Object.values(controller.positions);
  if (xs.length === 0) return;
  const box = {
    minX: Math.min(...xs.map((p) => p[0])),
    minY: Math.min(...xs.map((p) => p[1])),
    maxX: Math.max(...xs.map((p) => p[0])),
    maxY: Math.max(...xs.map((p) => p[1])),
  };
  camera.apply(camera.fitBox(box, 0.1));
  dirty = true;
}

// --- bootstrap ---

for (const value of ALL_CLASSES) {
  const option = document.createElement("option");
  option.value = value;
  option.textContent = value;
  editorClass.appendChild(option);
}
buildFilterPanel();

const params = new URLSearchParams(window.location.search);
const presetSession = params.get("session");
if (presetSession) {
  controller
    .attach(presetSession)
    .then(() => {
      buildFilterPanel(); // attach() resets the rule state; rebind checkboxes
      fitAll();
    })
    .catch(() => {
      statusLine.textContent = `session ${presetSession} not found; import a corpus JSON`;
    });
}

requestAnimationFrame(frame);

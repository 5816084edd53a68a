import { describe, expect, it } from "vitest";

import {
  ApiClient,
  RevisionConflictError,
  type MutationOp,
  type ServerView,
} from "../src/api.js";
import { canvasPngDataUrl } from "../src/png.js";
import { SessionController, defaultRuleFilter, splitKey } from "../src/state.js";

function baseView(): ServerView {
  return {
    revision: 0,
    mode: "dme",
    scheme: "by-type",
    nodes: [
      { key: "entity:e1", radius: 6, fill: "#43A047", pictogram: "person", emphasis: false, label: "Nikola Tesla", class: "PER" },
      { key: "mention:m2", radius: 4, fill: "#FB8C00", pictogram: "location", emphasis: false, label: "Berlin", class: "LOC" },
    ],
    edges: [],
    positions: { "entity:e1": [0, 0], "mention:m2": [5, 5] },
  };
}

class FakeApi extends ApiClient {
  calls: Array<[string, unknown]> = [];
  view: ServerView = baseView();
  conflictOnce = false;

  constructor() {
    super("fake://");
  }

  override async createSession(): Promise<{ id: string; revision: number }> {
    this.calls.push(["createSession", null]);
    return { id: "s1", revision: 0 };
  }

  override async getView(): Promise<ServerView> {
    this.calls.push(["getView", null]);
    return JSON.parse(JSON.stringify(this.view));
  }

  override async setFilters(_id: string, body: unknown): Promise<{ revision: number }> {
    this.calls.push(["setFilters", body]);
    return { revision: this.view.revision };
  }

  override async applyOps(_id: string, expected: number, ops: MutationOp[]): Promise<{ revision: number }> {
    if (this.conflictOnce) {
      this.conflictOnce = false;
      throw new RevisionConflictError(this.view.revision);
    }
    this.calls.push(["applyOps", { expected, ops }]);
    this.view.revision += 1;
    return { revision: this.view.revision };
  }

  override async undo(): Promise<{ revision: number }> {
    this.calls.push(["undo", null]);
    this.view.revision += 1;
    return { revision: this.view.revision };
  }

  override async redo(): Promise<{ revision: number }> {
    this.calls.push(["redo", null]);
    this.view.revision += 1;
    return { revision: this.view.revision };
  }

  override async pin(_id: string, key: string, position: [number, number]): Promise<{ revision: number }> {
    this.calls.push(["pin", { key, position }]);
    return { revision: this.view.revision };
  }

  named(name: string): Array<[string, unknown]> {
    return this.calls.filter(([n]) => n === name);
  }
}

async function attached(): Promise<[SessionController, FakeApi]> {
  const api = new FakeApi();
  const controller = new SessionController(api);
  await controller.attach("s1");
  return [controller, api];
}

describe("session controller", () => {
  it("click-select sets the server selection filter", async () => {
    const [controller, api] = await attached();
    await controller.selectNode("mention:m2");
    const call = api.named("setFilters").at(-1)![1] as { focusState: { selected: string } };
    expect(call.focusState.selected).toBe("mention:m2");
    expect(controller.selection).toBe("mention:m2");
  });

  it("delete hotkey deletes the selected node through ops", async () => {
    const [controller, api] = await attached();
    await controller.selectNode("mention:m2");
    api.view.nodes = api.view.nodes.filter((n) => n.key !== "mention:m2");
    await controller.handleKey("Delete", {});
    const ops = api.named("applyOps").at(-1)![1] as { expected: number; ops: MutationOp[] };
    expect(ops.ops).toEqual([{ op: "deleteNode", key: "mention:m2" }]);
    expect(controller.selection).toBeNull();
  });

  it("a 409 refetches the view and replays nothing", async () => {
    const [controller, api] = await attached();
    api.conflictOnce = true;
    const done = await controller.applyOps([{ op: "deleteNode", key: "mention:m2" }]);
    expect(done).toBe(false);
    expect(api.named("applyOps")).toHaveLength(0); // nothing replayed
    expect(api.named("getView").length).toBeGreaterThanOrEqual(2); // refetched
  });

  it("ctrl+z and ctrl+shift+z map to undo and redo", async () => {
    const [controller, api] = await attached();
    await controller.handleKey("z", { ctrl: true });
    await controller.handleKey("Z", { ctrl: true, shift: true });
    expect(api.named("undo")).toHaveLength(1);
    expect(api.named("redo")).toHaveLength(1);
  });

  it("v toggles the structural view", async () => {
    const [controller, api] = await attached();
    api.view.mode = "dme";
    await controller.handleKey("v", {});
    // the controller asked for the other mode
    expect(controller.view).not.toBeNull();
  });

  it("f toggles the node focus filter on the selection", async () => {
    const [controller, api] = await attached();
    await controller.selectNode("entity:e1");
    await controller.handleKey("f", {});
    let call = api.named("setFilters").at(-1)![1] as { focusState: { focused: string | null } };
    expect(call.focusState.focused).toBe("entity:e1");
    await controller.handleKey("f", {});
    call = api.named("setFilters").at(-1)![1] as { focusState: { focused: string | null } };
    expect(call.focusState.focused).toBeNull();
  });

  it("node editor saves term edits and blocks empty terms", async () => {
    const [controller, api] = await attached();
    const saved = await controller.saveEdit("entity:e1", { term: "N. Tesla", entityClass: "PER" });
    expect(saved).toBe(true);
    const ops = api.named("applyOps").at(-1)![1] as { ops: MutationOp[] };
    expect(ops.ops).toEqual([{ op: "setEntityTerm", entity: "e1", term: "N. Tesla" }]);

    const blocked = await controller.saveEdit("entity:e1", { term: "   ", entityClass: "PER" });
    expect(blocked).toBe(false);
    expect(controller.lastError).toMatch(/empty/);
  });

  it("dragging pins the node server-side and moves it locally", async () => {
    const [controller, api] = await attached();
    await controller.dragNodeTo("entity:e1", [42, -7]);
    expect(api.named("pin").at(-1)![1]).toEqual({ key: "entity:e1", position: [42, -7] });
    expect(controller.positions["entity:e1"]).toEqual([42, -7]);
  });

  it("rule filter state round-trips to the wire shape", async () => {
    const [controller, api] = await attached();
    const rule = defaultRuleFilter();
    rule.entityClasses.delete("LOC");
    await controller.setRuleFilter(rule);
    const call = api.named("setFilters").at(-1)![1] as { ruleFilter: { entityClasses: string[] } };
    expect(call.ruleFilter.entityClasses.sort()).toEqual(["MISC", "ORG", "PER"]);
    expect(call.ruleFilter).not.toHaveProperty("collocation");
  });

  it("default edge kinds hide collocations", () => {
    const rule = defaultRuleFilter();
    expect(rule.edgeKinds.has("collocation")).toBe(false);
    expect(rule.edgeKinds.has("mention-entity")).toBe(true);
  });

  it("splitKey keeps opaque ids intact", () => {
    expect(splitKey("mention:m:1")).toEqual(["mention", "m:1"]);
  });
});

describe("png export", () => {
  it("returns the canvas raster data url", () => {
    const stub = { toDataURL: (type: string) => `data:${type};base64,iVBORw0KGgo=` };
    const url = canvasPngDataUrl(stub);
    expect(url.startsWith("data:image/png")).toBe(true);
    expect(url.length).toBeGreaterThan("data:image/png;base64,".length);
  });

  it("rejects an empty raster", () => {
    expect(() => canvasPngDataUrl({ toDataURL: () => "" })).toThrow();
  });
});

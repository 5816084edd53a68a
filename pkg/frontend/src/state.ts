/** UI session controller: mirrors server state, turns user intent into calls.
 *
 * The server owns all graph semantics. Every mutation goes through the
 * optimistic-revision endpoint; on a conflict the controller refetches the
 * view and replays nothing.
 */

import {
  ApiClient,
  ApiError,
  type MutationOp,
  type Positions,
  type RuleFilterPayload,
  type SearchHit,
  type ServerView,
  RevisionConflictError,
} from "./api.js";

export const ALL_NODE_KINDS = ["document", "mention", "entity"];
export const ALL_CLASSES = ["PER", "ORG", "LOC", "MISC"];
export const ALL_EDGE_KINDS = ["mention-document", "mention-entity", "collocation", "entity-document"];
export const DEFAULT_EDGE_KINDS = ALL_EDGE_KINDS.filter((k) => k !== "collocation");

export interface RuleFilterState {
  nodeKinds: Set<string>;
  entityClasses: Set<string>;
  edgeKinds: Set<string>;
}

export function defaultRuleFilter(): RuleFilterState {
  return {
    nodeKinds: new Set(ALL_NODE_KINDS),
    entityClasses: new Set(ALL_CLASSES),
    edgeKinds: new Set(DEFAULT_EDGE_KINDS),
  };
}

export interface PendingEdit {
  term: string;
  entityClass: string;
}

export class SessionController {
  sessionId: string | null = null;
  view: ServerView | null = null;
  selection: string | null = null;
  focusedNode: string | null = null;
  selectedEdge: { kind: string; a: string; b: string } | null = null;
  rule: RuleFilterState = defaultRuleFilter();
  searchHits: SearchHit[] = [];
  layoutRunning = false;
  lastError: string | null = null;
  onChange: () => void = () => {};
  /** Set when an interaction wants the camera moved (main loop consumes it). */
  zoomRequest: string | null = null;

  constructor(readonly api: ApiClient) {}

  private notify(): void {
    this.onChange();
  }

  get revision(): number {
    return this.view?.revision ?? 0;
  }

  get mode(): string {
    return this.view?.mode ?? "dme";
  }

  get scheme(): string {
    return this.view?.scheme ?? "by-type";
  }

  get positions(): Positions {
    return this.view?.positions ?? {};
  }

  async importFile(payload: unknown): Promise<void> {
    const created = await this.api.createSession(payload);
    await this.attach(created.id);
  }

  async attach(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    this.selection = null;
    this.focusedNode = null;
    this.selectedEdge = null;
    this.rule = defaultRuleFilter();
    await this.refresh();
  }

  async refresh(params: { mode?: string; scheme?: string } = {}): Promise<void> {
    if (!this.sessionId) return;
    this.view = await this.api.getView(this.sessionId, params);
    // Server may have dropped focus keys that no longer exist.
    const keys = new Set(this.view.nodes.map((n) => n.key));
    if (this.selection && !keys.has(this.selection)) this.selection = null;
    if (this.focusedNode && !keys.has(this.focusedNode)) this.focusedNode = null;
    if (this.selectedEdge) {
      const stillThere = this.view.edges.some(
        (e) => e.a === this.selectedEdge!.a && e.b === this.selectedEdge!.b
      );
      if (!stillThere) this.selectedEdge = null;
    }
    this.notify();
  }

  /** Wrap a server mutation; a stale revision means refetch, never replay. */
  private async mutate(action: () => Promise<unknown>): Promise<boolean> {
    if (!this.sessionId) return false;
    try {
      await action();
      this.lastError = null;
    } catch (error) {
      if (error instanceof RevisionConflictError) {
        await this.refresh();
        return false;
      }
      if (error instanceof ApiError) {
        this.lastError = error.message;
        this.notify();
        return false;
      }
      throw error;
    }
    await this.refresh();
    return true;
  }

  async applyOps(ops: MutationOp[]): Promise<boolean> {
    return this.mutate(() => this.api.applyOps(this.sessionId!, this.revision, ops));
  }

  async selectNode(key: string | null): Promise<void> {
    if (!this.sessionId) return;
    this.selection = key;
    this.selectedEdge = null;
    await this.api.setFilters(this.sessionId, {
      focusState: { selected: key, focused: this.focusedNode },
    });
    await this.refresh();
  }

  selectEdge(edge: { kind: string; a: string; b: string } | null): void {
    this.selectedEdge = edge;
    this.notify();
  }

  async toggleFocus(): Promise<void> {
    if (!this.sessionId || !this.selection) return;
    this.focusedNode = this.focusedNode === this.selection ? null : this.selection;
    await this.api.setFilters(this.sessionId, {
      focusState: { selected: this.selection, focused: this.focusedNode },
    });
    await this.refresh();
  }

  async toggleView(): Promise<void> {
    await this.refresh({ mode: this.mode === "dme" ? "de" : "dme" });
  }

  async toggleScheme(): Promise<void> {
    await this.refresh({ scheme: this.scheme === "by-type" ? "by-class" : "by-type" });
  }

  async setRuleFilter(rule: RuleFilterState): Promise<void> {
    if (!this.sessionId) return;
    this.rule = rule;
    const payload: RuleFilterPayload = {
      nodeKinds: [...rule.nodeKinds],
      entityClasses: [...rule.entityClasses],
      edgeKinds: [...rule.edgeKinds],
    };
    await this.api.setFilters(this.sessionId, { ruleFilter: payload });
    await this.refresh();
  }

  async deleteSelected(): Promise<boolean> {
    if (this.selectedEdge) {
      const edge = this.selectedEdge;
      this.selectedEdge = null;
      return this.applyOps([{ op: "deleteEdge", kind: edge.kind, a: edge.a, b: edge.b }]);
    }
    if (this.selection) {
      const key = this.selection;
      this.selection = null;
      return this.applyOps([{ op: "deleteNode", key }]);
    }
    return false;
  }

  async undo(): Promise<void> {
    if (!this.sessionId) return;
    try {
      await this.api.undo(this.sessionId);
    } catch (error) {
      if (!(error instanceof ApiError)) throw error; // empty history: ignore
    }
    await this.refresh();
  }

  async redo(): Promise<void> {
    if (!this.sessionId) return;
    try {
      await this.api.redo(this.sessionId);
    } catch (error) {
      if (!(error instanceof ApiError)) throw error;
    }
    await this.refresh();
  }

  /** Node editor submit: empty terms are blocked client-side. */
  async saveEdit(key: string, edit: PendingEdit): Promise<boolean> {
    const node = this.view?.nodes.find((n) => n.key === key);
    if (!node) return false;
    const ops: MutationOp[] = [];
    const [kind, id] = splitKey(key);
    if (kind === "entity" && edit.term !== node.label) {
      if (!edit.term.trim()) {
        this.lastError = "term must not be empty";
        this.notify();
        return false;
      }
      ops.push({ op: "setEntityTerm", entity: id, term: edit.term });
    }
    if (kind !== "document" && node.class !== null && edit.entityClass !== node.class) {
      ops.push({ op: "setNodeClass", key, class: edit.entityClass });
    }
    if (ops.length === 0) return true;
    return this.applyOps(ops);
  }

  async mergeInto(keep: string, absorb: string): Promise<boolean> {
    return this.applyOps([{ op: "mergeEntities", keep, absorb }]);
  }

  async dragNodeTo(key: string, world: [number, number]): Promise<void> {
    if (!this.sessionId || !this.view) return;
    // optimistic local move so the drag feels immediate
    this.view.positions[key] = world;
    this.notify();
    await this.api.pin(this.sessionId, key, world, true);
  }

  async searchFor(text: string, limit = 8): Promise<void> {
    if (!this.sessionId) return;
    this.searchHits = text.trim() ? await this.api.search(this.sessionId, text, limit) : [];
    this.notify();
  }

  /** Picking a search hit selects it and asks for a contextual zoom. */
  async chooseHit(key: string): Promise<void> {
    await this.selectNode(key);
    this.zoomRequest = key;
    this.notify();
  }

  async startLayout(steps = 1000): Promise<void> {
    if (!this.sessionId) return;
    try {
      await this.api.layout(this.sessionId, { action: "start", steps });
    } catch (error) {
      if (!(error instanceof ApiError)) throw error; // already running
    }
    this.layoutRunning = true;
    this.notify();
    const sid = this.sessionId;
    await this.api.streamLayout(sid, (frame) => {
      if (this.sessionId === sid && this.view) {
        // frames are applied whole; never merge partial positions
        this.view.positions = { ...this.view.positions, ...frame.positions };
        this.layoutRunning = frame.running;
        this.notify();
      }
    });
    this.layoutRunning = false;
    this.notify();
  }

  async stopLayout(): Promise<void> {
    if (!this.sessionId) return;
    await this.api.layout(this.sessionId, { action: "stop" });
    this.layoutRunning = false;
    await this.refresh();
  }

  async exportJson(): Promise<string> {
    if (!this.sessionId) throw new Error("no session");
    return this.api.exportJson(this.sessionId);
  }

  /** Hotkeys: Delete/Backspace, Ctrl+Z / Ctrl+Shift+Z, V (view), F (focus). */
  async handleKey(key: string, mods: { ctrl?: boolean; shift?: boolean } = {}): Promise<void> {
    if (key === "Delete" || key === "Backspace") {
      await this.deleteSelected();
    } else if (mods.ctrl && mods.shift && key.toLowerCase() === "z") {
      await this.redo();
    } else if (mods.ctrl && key.toLowerCase() === "z") {
      await this.undo();
    } else if (!mods.ctrl && key.toLowerCase() === "v") {
      await this.toggleView();
    } else if (!mods.ctrl && key.toLowerCase() === "f") {
      await this.toggleFocus();
    }
  }
}

export function splitKey(key: string): [string, string] {
  const colon = key.indexOf(":");
  return [key.slice(0, colon), key.slice(colon + 1)];
}

/** Typed client for the session service. The UI computes no graph semantics
 *  of its own: what the server says is visible is what gets drawn. */

export interface VisualNode {
  key: string;
  radius: number;
  fill: string;
  pictogram: string;
  emphasis: boolean;
  label: string;
  class: string | null;
}

export interface VisualEdge {
  a: string;
  b: string;
  kind: string;
  weight: number;
  confidence: number;
  style: string;
}

export type Positions = Record<string, [number, number]>;

export interface ServerView {
  revision: number;
  mode: string;
  scheme: string;
  nodes: VisualNode[];
  edges: VisualEdge[];
  positions: Positions;
}

export interface SearchHit {
  key: string;
  score: number;
  matchedField: string;
  matchKind: string;
}

export interface RuleFilterPayload {
  nodeKinds?: string[];
  entityClasses?: string[];
  edgeKinds?: string[];
}

export interface FocusPayload {
  selected?: string | null;
  focused?: string | null;
}

export type MutationOp =
  | { op: "deleteNode"; key: string }
  | { op: "deleteEdge"; kind: string; a: string; b: string }
  | { op: "setEntityTerm"; entity: string; term: string }
  | { op: "setNodeClass"; key: string; class: string }
  | { op: "mergeEntities"; keep: string; absorb: string }
  | { op: "addEdge"; edge: Record<string, unknown> }
  | { op: "addNode"; node: Record<string, unknown> };

export class RevisionConflictError extends Error {
  constructor(readonly currentRevision: number | null) {
    super("revision conflict");
  }
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const response = await fetch(this.base + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (response.status === 409) {
      const detail = await response.json().catch(() => null);
      const current =
        detail && typeof detail === "object" && detail.detail?.currentRevision !== undefined
          ? detail.detail.currentRevision
          : null;
      throw new RevisionConflictError(current);
    }
    if (!response.ok) {
      const text = await response.text().catch(() => "");
      throw new ApiError(response.status, `${method} ${path} -> ${response.status}: ${text}`);
    }
    if (response.status === 204) return null;
    return response.json();
  }

  createSession(file: unknown): Promise<{ id: string; revision: number }> {
    return this.request("POST", "/sessions", file) as Promise<{ id: string; revision: number }>;
  }

  getView(id: string, params: { mode?: string; scheme?: string } = {}): Promise<ServerView> {
    const query = new URLSearchParams();
    if (params.mode) query.set("mode", params.mode);
    if (params.scheme) query.set("scheme", params.scheme);
    const suffix = query.toString() ? `?${query}` : "";
    return this.request("GET", `/sessions/${id}/graph${suffix}`) as Promise<ServerView>;
  }

  setFilters(
    id: string,
    body: { ruleFilter?: RuleFilterPayload; focusState?: FocusPayload }
  ): Promise<{ revision: number }> {
    return this.request("PUT", `/sessions/${id}/filters`, body) as Promise<{ revision: number }>;
  }

  applyOps(id: string, expectedRevision: number, ops: MutationOp[]): Promise<{ revision: number }> {
    return this.request("POST", `/sessions/${id}/ops`, { expectedRevision, ops }) as Promise<{
      revision: number;
    }>;
  }

  undo(id: string): Promise<{ revision: number }> {
    return this.request("POST", `/sessions/${id}/undo`) as Promise<{ revision: number }>;
  }

  redo(id: string): Promise<{ revision: number }> {
    return this.request("POST", `/sessions/${id}/redo`) as Promise<{ revision: number }>;
  }

  layout(
    id: string,
    body: { action: "start" | "stop" | "step"; steps?: number }
  ): Promise<{ running: boolean; positions?: Positions; iteration?: number }> {
    return this.request("POST", `/sessions/${id}/layout`, body) as Promise<{
      running: boolean;
      positions?: Positions;
    }>;
  }

  pin(id: string, key: string, position: [number, number], pinned = true): Promise<{ revision: number }> {
    return this.request("POST", `/sessions/${id}/pin`, { key, position, pinned }) as Promise<{
      revision: number;
    }>;
  }

  search(id: string, q: string, limit = 10): Promise<SearchHit[]> {
    const query = new URLSearchParams({ q, limit: String(limit) });
    return (this.request("GET", `/sessions/${id}/search?${query}`) as Promise<{ hits: SearchHit[] }>).then(
      (body) => body.hits
    );
  }

  async exportJson(id: string): Promise<string> {
    const response = await fetch(`${this.base}/sessions/${id}/export`);
    if (!response.ok) throw new ApiError(response.status, "export failed");
    return response.text();
  }

  /** Consume the layout position stream; frames are applied whole. */
  async streamLayout(id: string, onFrame: (frame: { iteration: number; running: boolean; positions: Positions }) => void): Promise<void> {
    const response = await fetch(`${this.base}/sessions/${id}/layout/stream`);
    if (!response.ok || response.body === null) throw new ApiError(response.status, "stream failed");
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let newline;
      while ((newline = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, newline).trim();
        buffer = buffer.slice(newline + 1);
        if (line) onFrame(JSON.parse(line));
      }
    }
  }
}

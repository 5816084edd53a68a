"""HTTP boundary: session lifecycle, views, mutations, layout control, search.

Sessions are in-memory. Each session serializes its writers through one lock:
mutations, filter changes, undo/redo, and layout start/stop all take it, and
anything that changes what is visible stops a running layout task first.
Readers work on snapshots (a running layout task publishes immutable position
frames), so a response is always internally consistent and carries the
revision of the snapshot it was computed from.

The layout stream is newline-delimited JSON over a chunked response: at most
one frame every 100 ms while the task runs, then exactly one terminal frame.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass
from typing import Iterator

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response, StreamingResponse

from . import io_formats, layout, search, store as store_mod
from .model import (
    DocumentNode,
    EdgeKind,
    EmptyHistoryError,
    EntityClass,
    EntityNode,
    GlobalKey,
    GraphError,
    MentionNode,
    NodeKind,
    RevisionConflictError,
    key_from_string,
)
from .store import (
    AddEdge,
    AddNode,
    DeleteEdge,
    DeleteNode,
    GraphStore,
    MergeEntities,
    MutationOp,
    SetEntityTerm,
    SetNodeClass,
)
from .view import (
    ColorScheme,
    FilteredGraph,
    FocusState,
    RuleFilter,
    ViewMode,
    ViewState,
    apply_filters,
    map_visuals,
    project_view,
)

STREAM_INTERVAL_SECONDS = 0.1
DEFAULT_LAYOUT_STEPS = 1000


@dataclass(frozen=True)
class Frame:
    """Immutable position snapshot published by a layout task."""

    iteration: int
    running: bool
    positions: dict[GlobalKey, tuple[float, float]]


class _LayoutTask(threading.Thread):
    """Owns its LayoutState while running; publishes frames for readers."""

    def __init__(
        self,
        state: layout.LayoutState,
        graph: layout.LayoutGraph,
        params: layout.LayoutParams,
        max_steps: int,
    ):
        super().__init__(daemon=True)
        self.state = state
        self.graph = graph
        self.params = params
        self.max_steps = max_steps
        self.stop_event = threading.Event()
        self.latest_frame: Frame | None = None
        self.finished = threading.Event()

    def run(self) -> None:
        try:
            for _ in range(self.max_steps):
                if self.stop_event.is_set():
                    break
                layout.step(self.state, self.graph, self.params)
                self.latest_frame = Frame(self.state.iteration, True, self.state.positions())
        finally:
            self.latest_frame = Frame(self.state.iteration, False, self.state.positions())
            self.finished.set()


class Session:
    def __init__(self, session_id: str, graph_store: GraphStore):
        self.id = session_id
        self.store = graph_store
        self.lock = threading.RLock()
        self.mode = ViewMode.DME
        self.rule = RuleFilter()
        self.focus = FocusState()
        self.scheme = ColorScheme.BY_TYPE
        self.layout_params = layout.LayoutParams()
        self.layout_state: layout.LayoutState | None = None
        self.layout_task: _LayoutTask | None = None
        self.index = search.SearchIndex.build(graph_store)

    # All helpers below expect the session lock to be held.

    def view_state(self) -> ViewState:
        return ViewState(mode=self.mode, rule=self.rule, focus=self.focus, scheme=self.scheme)

    def filtered_graph(self) -> FilteredGraph:
        structural = project_view(self.store, self.mode)
        return apply_filters(structural, self.rule, self.focus)

    def layout_running(self) -> bool:
        return self.layout_task is not None and not self.layout_task.finished.is_set()

    def ensure_positions(self, filtered: FilteredGraph) -> layout.LayoutState:
        """Align the layout state with the visible node set.

        Nodes that stay visible keep their coordinates; newly visible nodes
        get seeded ones. Never called while a layout task is running.
        """
        visible = sorted(filtered.nodes, key=GlobalKey.sort_key)
        if self.layout_state is not None and self.layout_state.keys == visible:
            return self.layout_state
        current = self.layout_state.positions() if self.layout_state is not None else {}
        positions = {key: current[key] for key in visible if key in current}
        missing = [key for key in visible if key not in positions]
        if missing:
            positions.update(layout.init_positions(missing, self.layout_params.seed))
        pinned = self.layout_state.pinned if self.layout_state is not None else set()
        state = layout.LayoutState({key: positions[key] for key in visible})
        for key in pinned:
            if key in positions:
                layout.pin(state, key, positions[key])
        self.layout_state = state
        return state

    def current_positions(self) -> dict[GlobalKey, tuple[float, float]]:
        """Latest safe position snapshot, whether or not a task is running."""
        task = self.layout_task
        if task is not None and task.latest_frame is not None:
            return task.latest_frame.positions
        if self.layout_state is not None:
            return self.layout_state.positions()
        return {}

    def stop_layout(self) -> None:
        task = self.layout_task
        if task is None:
            return
        task.stop_event.set()
        task.join()
        self.layout_state = task.state
        self.layout_task = None

    def drop_stale_focus(self) -> None:
        structural = project_view(self.store, self.mode)
        selected = self.focus.selected if self.focus.selected in structural.nodes else None
        focused = self.focus.focused if self.focus.focused in structural.nodes else None
        self.focus = FocusState(selected=selected, focused=focused)


class SessionManager:
    def __init__(self, max_sessions: int = 32):
        self.max_sessions = max_sessions
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, file: io_formats.ImportFile, session_id: str | None = None) -> Session:
        with self._lock:
            if len(self._sessions) >= self.max_sessions:
                raise HTTPException(status_code=429, detail="session limit reached")
            session_id = session_id or uuid.uuid4().hex
            session = Session(session_id, store_mod.build_from_import(file))
            if file.view_state is not None:
                session.mode = file.view_state.mode
                session.rule = file.view_state.rule
                session.focus = file.view_state.focus
                session.scheme = file.view_state.scheme
            if file.positions:
                session.layout_state = layout.LayoutState(
                    dict(sorted(file.positions.items(), key=lambda kv: kv[0].sort_key()))
                )
            self._sessions[session_id] = session
            return session

    def get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session


def _positions_payload(positions: dict[GlobalKey, tuple[float, float]]) -> dict[str, list[float]]:
    return {str(key): [x, y] for key, (x, y) in positions.items()}


def _view_payload(session: Session, filtered: FilteredGraph, positions: dict[GlobalKey, tuple[float, float]]) -> dict:
    visible = map_visuals(filtered, session.scheme)
    return {
        "revision": session.store.revision,
        "mode": session.mode.value,
        "scheme": session.scheme.value,
        "nodes": [
            {
                "key": str(node.key),
                "radius": node.radius,
                "fill": node.fill,
                "pictogram": node.pictogram,
                "emphasis": node.emphasis,
                "label": node.label,
                "class": node.entity_class.value if node.entity_class else None,
            }
            for node in visible.nodes
        ],
        "edges": [
            {
                "a": str(edge.a),
                "b": str(edge.b),
                "kind": edge.kind.value,
                "weight": edge.weight,
                "confidence": edge.confidence,
                "style": edge.style,
            }
            for edge in visible.edges
        ],
        "positions": _positions_payload({key: positions[key] for key in filtered.nodes if key in positions}),
    }


def _parse_op(raw: dict) -> MutationOp:
    kind = raw.get("op")
    try:
        if kind == "addNode":
            return AddNode(_parse_node(raw["node"]))
        if kind == "deleteNode":
            return DeleteNode(key_from_string(raw["key"]))
        if kind == "addEdge":
            edge = raw["edge"]
            return AddEdge(
                kind=EdgeKind(edge["kind"]),
                a=key_from_string(edge["a"]),
                b=key_from_string(edge["b"]),
                confidence=float(edge.get("confidence", 1.0)),
                weight=int(edge.get("weight", 1)),
            )
        if kind == "deleteEdge":
            return DeleteEdge(
                kind=EdgeKind(raw["kind"]),
                a=key_from_string(raw["a"]),
                b=key_from_string(raw["b"]),
            )
        if kind == "setEntityTerm":
            return SetEntityTerm(entity=raw["entity"], term=raw["term"])
        if kind == "setNodeClass":
            return SetNodeClass(key=key_from_string(raw["key"]), entity_class=EntityClass.from_code(raw["class"]))
        if kind == "mergeEntities":
            return MergeEntities(keep=raw["keep"], absorb=raw["absorb"])
    except HTTPException:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=f"malformed op {kind!r}: {exc}") from exc
    raise HTTPException(status_code=400, detail=f"unknown op {kind!r}")


def _parse_node(raw: dict):
    kind = NodeKind(raw["kind"])
    if kind is NodeKind.DOCUMENT:
        return DocumentNode(
            id=raw["id"],
            title=raw["title"],
            text=raw.get("text"),
            sentences=tuple((int(s), int(e)) for s, e in raw.get("sentences", [])),
        )
    if kind is NodeKind.MENTION:
        return MentionNode(
            id=raw["id"],
            document=raw["document"],
            span=(int(raw["start"]), int(raw["end"])),
            surface=raw["surface"],
            entity_class=EntityClass.from_code(raw["class"]),
        )
    return EntityNode(id=raw["id"], term=raw["term"], entity_class=EntityClass.from_code(raw["class"]))


def create_app(max_sessions: int = 32) -> FastAPI:
    app = FastAPI(title="nergraph", version="0.1.0")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])
    manager = SessionManager(max_sessions=max_sessions)
    app.state.manager = manager

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request) -> dict:
        body = await request.body()
        violations = io_formats.validate(body)
        if violations:
            raise HTTPException(
                status_code=400,
                detail={"violations": [{"path": v.path, "reason": v.reason} for v in violations]},
            )
        file = io_formats.parse_import(body)
        session = manager.create(file)
        return {"id": session.id, "revision": session.store.revision}

    @app.get("/sessions/{session_id}/graph")
    def get_view(
        session_id: str,
        mode: str | None = Query(default=None),
        scheme: str | None = Query(default=None),
    ) -> dict:
        session = manager.get(session_id)
        with session.lock:
            if mode is not None:
                try:
                    new_mode = ViewMode(mode)
                except ValueError:
                    raise HTTPException(status_code=400, detail=f"unknown mode {mode!r}") from None
                if new_mode is not session.mode:
                    session.stop_layout()
                    session.mode = new_mode
                    session.drop_stale_focus()
            if scheme is not None:
                try:
                    session.scheme = ColorScheme(scheme)
                except ValueError:
                    raise HTTPException(status_code=400, detail=f"unknown scheme {scheme!r}") from None
            filtered = session.filtered_graph()
            if not session.layout_running():
                session.ensure_positions(filtered)
            return _view_payload(session, filtered, session.current_positions())

    @app.put("/sessions/{session_id}/filters")
    def set_filters(session_id: str, body: dict) -> dict:
        session = manager.get(session_id)
        with session.lock:
            structural = project_view(session.store, session.mode)
            rule = session.rule
            if body.get("ruleFilter") is not None:
                rule = _rule_from_payload(body["ruleFilter"])
            focus = session.focus
            if "focusState" in body:
                focus = _focus_from_payload(body.get("focusState") or {}, structural)
            session.stop_layout()
            session.rule = rule
            session.focus = focus
            return {"revision": session.store.revision}

    def _rule_from_payload(raw: dict) -> RuleFilter:
        try:
            default = RuleFilter()
            node_kinds = (
                frozenset(NodeKind(v) for v in raw["nodeKinds"]) if "nodeKinds" in raw else default.node_kinds
            )
            classes = (
                frozenset(EntityClass.from_code(v) for v in raw["entityClasses"])
                if "entityClasses" in raw
                else default.entity_classes
            )
            edge_kinds = (
                frozenset(EdgeKind(v) for v in raw["edgeKinds"]) if "edgeKinds" in raw else default.edge_kinds
            )
        except (ValueError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=f"malformed rule filter: {exc}") from exc
        return RuleFilter(node_kinds=node_kinds, entity_classes=classes, edge_kinds=edge_kinds)

    def _focus_from_payload(raw: dict, structural) -> FocusState:
        keys = {}
        for name in ("selected", "focused"):
            value = raw.get(name)
            if value is None:
                keys[name] = None
                continue
            try:
                key = key_from_string(value)
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            if key not in structural.nodes:
                raise HTTPException(status_code=400, detail=f"focus key {key} not in the current view")
            keys[name] = key
        return FocusState(selected=keys["selected"], focused=keys["focused"])

    @app.post("/sessions/{session_id}/ops")
    def mutate(session_id: str, body: dict) -> dict:
        session = manager.get(session_id)
        expected = body.get("expectedRevision")
        if not isinstance(expected, int) or isinstance(expected, bool):
            raise HTTPException(status_code=400, detail="expectedRevision must be an integer")
        ops_raw = body.get("ops")
        if not isinstance(ops_raw, list) or not ops_raw:
            raise HTTPException(status_code=400, detail="ops must be a non-empty array")
        ops = [_parse_op(raw) for raw in ops_raw]
        with session.lock:
            session.stop_layout()
            try:
                entry = session.store.apply(ops, expected_revision=expected)
            except RevisionConflictError as exc:
                raise HTTPException(
                    status_code=409,
                    detail={"error": str(exc), "currentRevision": session.store.revision},
                ) from exc
            except GraphError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            session.index.refresh(session.store, entry.touched_keys)
            session.drop_stale_focus()
            return {"revision": session.store.revision}

    @app.post("/sessions/{session_id}/undo")
    def undo(session_id: str) -> dict:
        return _replay(session_id, forward=False)

    @app.post("/sessions/{session_id}/redo")
    def redo(session_id: str) -> dict:
        return _replay(session_id, forward=True)

    def _replay(session_id: str, forward: bool) -> dict:
        session = manager.get(session_id)
        with session.lock:
            session.stop_layout()
            pending = session.store.redo_stack if forward else session.store.journal
            if not pending:
                raise HTTPException(status_code=400, detail="history is empty")
            entry = pending[-1]
            try:
                revision = session.store.redo() if forward else session.store.undo()
            except EmptyHistoryError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            session.index.refresh(session.store, entry.touched_keys)
            session.drop_stale_focus()
            return {"revision": revision}

    @app.post("/sessions/{session_id}/layout")
    def layout_control(session_id: str, body: dict) -> dict:
        session = manager.get(session_id)
        action = body.get("action")
        with session.lock:
            if action == "start":
                if session.layout_running():
                    raise HTTPException(status_code=409, detail="layout already running")
                session.stop_layout()
                filtered = session.filtered_graph()
                state = session.ensure_positions(filtered)
                graph = layout.LayoutGraph.from_filtered(filtered)
                steps = body.get("steps", DEFAULT_LAYOUT_STEPS)
                if not isinstance(steps, int) or isinstance(steps, bool) or steps < 0:
                    raise HTTPException(status_code=400, detail="steps must be a non-negative integer")
                task = _LayoutTask(state, graph, session.layout_params, steps)
                # Publish a frame before the thread runs so readers never
                # touch the state arrays mid-step.
                task.latest_frame = Frame(state.iteration, True, state.positions())
                session.layout_task = task
                task.start()
                return {"running": True, "revision": session.store.revision}
            if action == "stop":
                session.stop_layout()
                iteration = session.layout_state.iteration if session.layout_state else 0
                return {"running": False, "iteration": iteration, "revision": session.store.revision}
            if action == "step":
                if session.layout_running():
                    raise HTTPException(status_code=409, detail="layout already running")
                session.stop_layout()
                steps = body.get("steps", 1)
                if not isinstance(steps, int) or isinstance(steps, bool) or steps < 0:
                    raise HTTPException(status_code=400, detail="steps must be a non-negative integer")
                filtered = session.filtered_graph()
                state = session.ensure_positions(filtered)
                graph = layout.LayoutGraph.from_filtered(filtered)
                _, metrics = layout.run(state, graph, session.layout_params, steps)
                return {
                    "running": False,
                    "revision": session.store.revision,
                    "iteration": state.iteration,
                    "metrics": {
                        "iterations": metrics.iterations,
                        "meanSwinging": metrics.mean_swinging,
                        "meanTraction": metrics.mean_traction,
                    },
                    "positions": _positions_payload(state.positions()),
                }
        raise HTTPException(status_code=400, detail=f"unknown layout action {action!r}")

    @app.post("/sessions/{session_id}/pin")
    def pin_node(session_id: str, body: dict) -> dict:
        session = manager.get(session_id)
        with session.lock:
            session.stop_layout()
            filtered = session.filtered_graph()
            state = session.ensure_positions(filtered)
            try:
                key = key_from_string(body["key"])
                if body.get("pinned", True):
                    x, y = body["position"]
                    layout.pin(state, key, (float(x), float(y)))
                else:
                    layout.unpin(state, key)
            except GraphError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            except (KeyError, TypeError, ValueError) as exc:
                raise HTTPException(status_code=400, detail=f"malformed pin request: {exc}") from exc
            return {"revision": session.store.revision}

    @app.get("/sessions/{session_id}/layout/stream")
    def layout_stream(session_id: str) -> StreamingResponse:
        session = manager.get(session_id)

        def frames() -> Iterator[bytes]:
            last_iteration = -1
            while True:
                task = session.layout_task
                if task is None:
                    # No layout was started (or it was explicitly stopped):
                    # emit one terminal frame from the resting state.
                    with session.lock:
                        state = session.layout_state
                        terminal = Frame(
                            state.iteration if state else 0, False, state.positions() if state else {}
                        )
                    yield _frame_bytes(terminal)
                    return
                frame = task.latest_frame
                if frame is None:
                    # Task accepted but has not published its first frame yet.
                    time.sleep(STREAM_INTERVAL_SECONDS)
                    continue
                if frame.iteration > last_iteration or not frame.running:
                    last_iteration = frame.iteration
                    yield _frame_bytes(frame)
                if not frame.running:
                    return
                time.sleep(STREAM_INTERVAL_SECONDS)

        return StreamingResponse(frames(), media_type="application/x-ndjson")

    def _frame_bytes(frame: Frame) -> bytes:
        payload = {
            "iteration": frame.iteration,
            "running": frame.running,
            "positions": _positions_payload(frame.positions),
        }
        return (json.dumps(payload) + "\n").encode()

    @app.get("/sessions/{session_id}/search")
    def search_nodes(session_id: str, q: str = Query(default=""), limit: int = Query(default=10, ge=1)) -> dict:
        session = manager.get(session_id)
        with session.lock:
            hits = session.index.query(q, limit) if q else []
            return {
                "hits": [
                    {
                        "key": str(hit.key),
                        "score": hit.score,
                        "matchedField": hit.matched_field,
                        "matchKind": hit.match_kind,
                    }
                    for hit in hits
                ]
            }

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str) -> Response:
        session = manager.get(session_id)
        with session.lock:
            positions = session.current_positions() or None
            body = io_formats.export_graph(session.store, session.view_state(), positions)
            return Response(content=body, media_type="application/json")

    return app

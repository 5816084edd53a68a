"""Server entry point."""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import uvicorn

from . import io_formats
from .demo import demo_payload
from .service import create_app


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(prog="nergraph", description="Entity-graph curation service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--max-sessions", type=int, default=32)
    parser.add_argument("--demo", action="store_true", help="preload a small demo corpus as session 'demo'")
    parser.add_argument("--ui", type=Path, default=None, help="serve a built web UI directory at /")
    args = parser.parse_args(argv)

    app = create_app(max_sessions=args.max_sessions)
    if args.demo:
        file = io_formats.parse_import(json.dumps(demo_payload()))
        app.state.manager.create(file, session_id="demo")
        print(f"demo session ready: http://{args.host}:{args.port}/sessions/demo/graph")
    if args.ui is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=args.ui, html=True), name="ui")
        print(f"serving UI from {args.ui}")
    uvicorn.run(app, host=args.host, port=args.port)


if __name__ == "__main__":
    main()

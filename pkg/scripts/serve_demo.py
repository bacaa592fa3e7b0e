#!/usr/bin/env python3
"""Start the HTTP service with a freshly generated demo log preloaded.

Usage: python3 scripts/serve_demo.py [--host 127.0.0.1] [--port 8000]

Prints the id of the preloaded log so clients can start exploring
immediately (GET /logs/{id}/stats, POST /logs/{id}/discover, ...).
"""

import argparse
import io

import uvicorn

from ocmine.examples import generate_order_item_route_log
from ocmine.io import write_mdl
from ocmine.service import create_app


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args()

    app = create_app()
    buf = io.StringIO()
    write_mdl(generate_order_item_route_log(seed=1, n_orders=25), buf)
    from fastapi.testclient import TestClient

    with TestClient(app) as client:
        log_id = client.post("/logs", content=buf.getvalue()).json()["log_id"]
    print(f"demo log preloaded: {log_id}")
    uvicorn.run(app, host=args.host, port=args.port)


if __name__ == "__main__":
    main()

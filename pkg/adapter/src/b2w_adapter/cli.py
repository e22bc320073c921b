"""b2w-adapter entry point."""

from __future__ import annotations

import argparse
import sys

from .config import AdapterConfig, load_config
from .server import serve_adapter


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="b2w-adapter", description="Serve a diffusion renderer behind the b2w protocol")
    parser.add_argument("--port", type=int, required=True)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--config", help="adapter config JSON (see b2w_adapter.config)")
    parser.add_argument("--fake", action="store_true", help="serve the deterministic fake backend (no ML stack)")
    args = parser.parse_args(argv)
    config = load_config(args.config) if args.config else AdapterConfig()
    backend = None
    if args.fake:
        from .backends import FakeBackend

        backend = FakeBackend()
    try:
        serve_adapter(config, args.port, host=args.host, backend=backend)
    except Exception as e:
        print(f"error[adapter]: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Console entry point: ``fair-context-adapter --model tabpfn``."""

from __future__ import annotations

import argparse
import sys

from .backends import BACKENDS, BackendUnavailable, make_backend
from .protocol import AdapterSession, serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fair-context-adapter",
        description="serve a tabular foundation model over stdin/stdout JSON lines")
    parser.add_argument("--model", required=True, choices=sorted(BACKENDS),
                        help="which model to expose ('mean' is a test double)")
    parser.add_argument("--device", default=None, help="device hint, e.g. cpu or cuda")
    parser.add_argument("--max-context", type=int, default=None,
                        help="override the model's context-row ceiling")
    args = parser.parse_args(argv)

    try:
        backend = make_backend(args.model, device=args.device)
    except BackendUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    max_context = args.max_context if args.max_context is not None \
        else backend.default_max_context
    session = AdapterSession(backend=backend, model_name=args.model,
                             max_context=max_context, device=args.device)
    return serve(session)


if __name__ == "__main__":
    sys.exit(main())

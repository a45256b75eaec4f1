"""Command-line client for the availability service.

By default requests are served by an in-process application instance, so
no server needs to be running; --server points the same commands at a
remote deployment.  Exit codes: 0 success, 1 invalid model or document,
2 resource limit (exact inference or enumeration too large).
"""

from __future__ import annotations

import argparse
import json
import sys

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RESOURCE = 2


def make_client(server: str | None):
    if server:
        import httpx
        return httpx.Client(base_url=server, timeout=None)
    from fastapi.testclient import TestClient

    from .service.app import app
    return TestClient(app)


def _load_model_doc(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _write_out(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _print_violations(violations) -> None:
    for v in violations:
        print(f"violation {v['code']}: {v['message']}")


def cmd_validate(client, args) -> int:
    doc = _load_model_doc(args.model)
    resp = client.post("/validate", json={"model": doc}).json()
    if resp["valid"]:
        print("valid")
        return EXIT_OK
    _print_violations(resp["violations"])
    return EXIT_INVALID


def cmd_compile(client, args) -> int:
    doc = _load_model_doc(args.model)
    payload = {"model": doc, "gate_mode": args.gate_mode, "route_limit": args.route_limit}
    resp = client.post("/compile", json=payload).json()
    if resp["status"] != "ok":
        _print_violations(resp["violations"])
        return EXIT_INVALID
    _write_out(resp["dump"], args.out)
    print(f"nodes={resp['nodes']} edges={resp['edges']} channels={resp['channels']} "
          f"routes={resp['routes']}", file=sys.stderr)
    return EXIT_OK


def cmd_infer(client, args) -> int:
    doc = _load_model_doc(args.model)
    payload = {"model": doc, "method": args.method, "samples": args.samples,
               "seed": args.seed, "gate_mode": args.gate_mode, "route_limit": args.route_limit}
    resp = client.post("/infer", json=payload).json()
    if resp["status"] == "invalid":
        _print_violations(resp["violations"])
        return EXIT_INVALID
    if resp["status"] == "infeasible":
        print(f"infeasible: {resp['error']}", file=sys.stderr)
        return EXIT_RESOURCE
    print(f"availability={resp['availability']!r}")
    if resp.get("std_error") is not None:
        lo, hi = resp["ci95"]
        print(f"std_error={resp['std_error']!r}")
        print(f"ci95=({lo!r},{hi!r})")
    return EXIT_OK


def cmd_oracle(client, args) -> int:
    doc = _load_model_doc(args.model)
    payload = {"model": doc, "method": args.method, "samples": args.samples, "seed": args.seed}
    resp = client.post("/oracle", json=payload).json()
    if resp["status"] == "invalid":
        _print_violations(resp["violations"])
        return EXIT_INVALID
    if resp["status"] == "infeasible":
        print(f"infeasible: {resp['error']}", file=sys.stderr)
        return EXIT_RESOURCE
    print(f"availability={resp['availability']!r}")
    if resp.get("std_error") is not None:
        lo, hi = resp["ci95"]
        print(f"std_error={resp['std_error']!r}")
        print(f"ci95=({lo!r},{hi!r})")
    return EXIT_OK


def cmd_generate(client, args) -> int:
    payload = {"infra": args.infra, "seed": args.seed, "instances": args.instances,
               "kind": args.kind}
    resp = client.post("/generate", json=payload).json()
    _write_out(json.dumps(resp["model"], indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_sweep(client, args) -> int:
    payload = {"infra": args.infra, "kind": args.kind, "min_n": args.min_n,
               "max_n": args.max_n, "step": args.step, "method": args.method,
               "samples": args.samples, "seed": args.seed,
               "gate_mode": args.gate_mode, "route_limit": args.route_limit}
    resp = client.post("/sweep", json=payload).json()
    if resp["status"] != "ok":
        print(f"error: {resp['error']}", file=sys.stderr)
        return EXIT_INVALID
    lines = ["n,availability,build_time_s,inference_time_s,method,seed"]
    for r in resp["records"]:
        avail = "nan" if r["availability"] is None else repr(r["availability"])
        lines.append(f"{r['n']},{avail},{r['build_time_s']!r},{r['inference_time_s']!r},"
                     f"{r['method']},{r['seed']}")
    _write_out("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="availnet",
        description="Availability analysis of redundant and replicated services.")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_gate_flags(p):
        p.add_argument("--gate-mode", dest="gate_mode", default="auto",
                       choices=["auto", "dense", "scalable"])
        p.add_argument("--route-limit", dest="route_limit", type=int, default=None,
                       help="max routes per channel (default: all simple paths)")

    p = sub.add_parser("validate", help="check a model document")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compile", help="compile a model and dump the network")
    p.add_argument("model")
    p.add_argument("--out", default=None)
    add_gate_flags(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("infer", help="compute availability on the compiled network")
    p.add_argument("model")
    p.add_argument("--method", default="exact", choices=["exact", "forward"])
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    add_gate_flags(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("oracle", help="ground-truth availability from the model itself")
    p.add_argument("model")
    p.add_argument("--method", default="enumerate", choices=["enumerate", "mc"])
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("generate", help="emit a model document for a built-in scenario")
    p.add_argument("--infra", default="small", choices=["small", "large"])
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--kind", default="replicated", choices=["redundant", "replicated"])
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sweep", help="availability and timing sweep over instance counts")
    p.add_argument("--infra", default="small", choices=["small", "large"])
    p.add_argument("--kind", default="replicated", choices=["redundant", "replicated"])
    p.add_argument("--min-n", dest="min_n", type=int, required=True)
    p.add_argument("--max-n", dest="max_n", type=int, required=True)
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--method", default="forward", choices=["exact", "forward"])
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    add_gate_flags(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        client = make_client(args.server)
    except Exception as exc:  # pragma: no cover - connection setup
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(client, args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except json.JSONDecodeError as exc:
        print(f"error: model file is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

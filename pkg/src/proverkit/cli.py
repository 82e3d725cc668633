"""Operator command line.

    proverkit serve      --config CONFIG
    proverkit prove      STUB --mode {direct,informal,subagent} [--budget N]
    proverkit blueprint  {parse,validate,order,status} FILE
    proverkit bench      run --manifest FILE [--out DIR]
    proverkit bench      report --out DIR --manifest FILE
    proverkit search     index --out DIR ROOTS... / query --index DIR TEXT

Exit codes: 0 success, 1 operation failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from .blueprint import (
    BlueprintParseError,
    parse_blueprint,
    proving_order,
    serialize_blueprint,
    status_report,
    validate,
)
from .config import Config, ConfigError, load_config
from .leanbridge import BridgeError, LeanBridge
from .metrics import ReportError
from .orchestrator.budget import Budget
from .orchestrator.session import ProblemSpec, ScriptedDriver, run_prove
from .retrieval import (
    HashedBagOfWordsEmbedder,
    build_index,
    load_index,
    semantic_search,
)
from .tools import build_server

OK, FAILED, USAGE = 0, 1, 2

MODE_ALIASES = {"direct": "direct", "informal": "with_informal",
                "subagent": "with_subagents"}


def _load_config_arg(path: str | None) -> Config:
    return load_config(path)


def _bridge_from_config(config: Config) -> LeanBridge:
    return LeanBridge(
        config.project.root,
        server_command=config.bridge_command(),
        settle_quiet=config.project.settle_quiet,
        settle_max=config.project.settle_max,
        run_code_timeout=config.project.run_code_timeout,
        attempt_timeout=config.project.attempt_timeout,
        network_enabled=config.network_enabled,
        loogle_endpoint=config.loogle_endpoint,
        stdlib_roots=config.project.stdlib_roots,
    )


def cmd_serve(args: argparse.Namespace) -> int:
    import shutil

    config = _load_config_arg(args.config)
    if args.network is not None:
        config.network_enabled = args.network == "on"
    executable = config.bridge_command()[0]
    if shutil.which(executable) is None and not Path(executable).exists():
        print(f"language server executable not found: {executable}\n"
              f"install the Lean toolchain or set use_mock_server: true",
              file=sys.stderr)
        return USAGE
    server, ctx = build_server(config)
    try:
        server.serve(sys.stdin.buffer, sys.stdout.buffer)
    finally:
        ctx.close()
    return OK


def cmd_prove(args: argparse.Namespace) -> int:
    config = _load_config_arg(args.config)
    stub_path = Path(args.stub)
    if not stub_path.is_file():
        print(f"problem stub not found: {stub_path}", file=sys.stderr)
        return USAGE
    stub = stub_path.read_text(encoding="utf-8")
    statement = stub
    if args.statement:
        statement_path = Path(args.statement)
        if not statement_path.is_file():
            print(f"statement file not found: {statement_path}", file=sys.stderr)
            return USAGE
        statement = statement_path.read_text(encoding="utf-8")
    mode = MODE_ALIASES[args.mode]
    budget_limit = args.budget if args.budget is not None else config.default_budget

    script = {}
    if args.driver_script:
        import yaml

        script = yaml.safe_load(Path(args.driver_script).read_text(encoding="utf-8")) or {}
    problem_id = stub_path.stem
    entry = (script.get("modes", {}) or {}).get(mode, {}).get(problem_id, script.get(problem_id, {}))
    driver = ScriptedDriver({problem_id: entry})
    informal_client = None
    if mode in ("with_informal", "with_subagents"):
        informal_client = bench_mod.ScriptedInformalClient(
            accept=bool(entry.get("informal_accept", False)))

    bridge = _bridge_from_config(config)
    clock = bench_mod.FakeClock()
    with bridge:
        subagent_runner = None
        if mode == "with_subagents":
            subagent_runner = bench_mod._scripted_subagent_runner(entry, bridge, clock)
        session = run_prove(
            ProblemSpec(problem_id=problem_id, statement=statement.strip(), stub=stub),
            mode, driver, bridge, Budget(limit=budget_limit),
            informal_client=informal_client,
            subagent_runner=subagent_runner,
            clock=clock,
        )
    out_dir = Path(args.out) if args.out else Path("sessions")
    session_dir = bench_mod.persist_session(out_dir, session)
    print(f"{session.outcome}: transcript in {session_dir}")
    return OK if session.outcome == "proved" else FAILED


def cmd_blueprint(args: argparse.Namespace) -> int:
    path = Path(args.file)
    if not path.is_file():
        print(f"blueprint file not found: {path}", file=sys.stderr)
        return USAGE
    try:
        graph = parse_blueprint(path.read_text(encoding="utf-8"))
    except BlueprintParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return FAILED

    if args.action == "parse":
        if args.json:
            print(json.dumps(graph.to_dict(), indent=2, ensure_ascii=False))
        else:
            print(serialize_blueprint(graph), end="")
        return OK
    if args.action == "validate":
        findings = validate(graph)
        for finding in findings:
            print(f"{finding.kind}: {finding.message}")
        if findings:
            return FAILED
        print("ok: graph is well-formed")
        return OK
    if args.action == "order":
        findings = validate(graph)
        if findings:
            for finding in findings:
                print(f"{finding.kind}: {finding.message}", file=sys.stderr)
            return FAILED
        for node_id in proving_order(graph):
            print(node_id)
        return OK
    # status
    config = _load_config_arg(args.config)
    project_root = Path(args.project).resolve() if args.project else config.project.root
    if not project_root.is_dir():
        print(f"project root not found: {project_root}", file=sys.stderr)
        return USAGE
    config.project.root = project_root  # diagnostics must come from this project
    bridge = _bridge_from_config(config)
    try:
        statuses, findings = status_report(graph, project_root, bridge)
    except BridgeError as exc:
        print(f"bridge failure: {exc}", file=sys.stderr)
        return FAILED
    finally:
        bridge.close()
    for node_id in sorted(statuses, key=lambda n: graph.node(n).doc_order):
        print(f"{node_id}: {statuses[node_id]}")
    for finding in findings:
        print(f"finding: {finding.message}", file=sys.stderr)
    return OK


def cmd_bench_run(args: argparse.Namespace) -> int:
    config = _load_config_arg(args.config)
    try:
        manifest = bench_mod.load_manifest(Path(args.manifest))
    except bench_mod.ManifestError as exc:
        print(f"manifest error: {exc}", file=sys.stderr)
        return USAGE
    if manifest.project_root is not None:
        config.project.root = manifest.project_root
    mode = MODE_ALIASES[args.mode] if args.mode else None
    out_dir = Path(args.out) if args.out else None
    if args.parallel > 1:
        records, _ = bench_mod.run_bench(
            manifest, mode=mode, out_dir=out_dir, parallel=args.parallel,
            bridge_factory=lambda: _bridge_from_config(config))
    else:
        bridge = _bridge_from_config(config)
        with bridge:
            records, _ = bench_mod.run_bench(manifest, bridge, mode=mode,
                                             out_dir=out_dir)
    try:
        table, export = bench_mod.bench_report(records)
    except ReportError as exc:
        print(f"report error: {exc}", file=sys.stderr)
        return FAILED
    print(table)
    if out_dir is not None:
        bench_mod.write_report(out_dir, table, export)
    return OK


def cmd_bench_report(args: argparse.Namespace) -> int:
    try:
        manifest = bench_mod.load_manifest(Path(args.manifest))
    except bench_mod.ManifestError as exc:
        print(f"manifest error: {exc}", file=sys.stderr)
        return USAGE
    order = [p.problem_id for p in manifest.problems]
    try:
        table, export = bench_mod.report_from_logs(Path(args.out), order)
    except ReportError as exc:
        print(f"report error: {exc}", file=sys.stderr)
        return FAILED
    print(table)
    if args.export:
        Path(args.export).write_text(json.dumps(export, indent=2) + "\n",
                                     encoding="utf-8")
    return OK


def cmd_search_index(args: argparse.Namespace) -> int:
    config = _load_config_arg(args.config)
    roots = []
    for spec in args.roots:
        if "=" in spec:
            package, _, root = spec.partition("=")
        else:
            package, root = Path(spec).name, spec
        root_path = Path(root)
        if not root_path.is_dir():
            print(f"package root not found: {root_path}", file=sys.stderr)
            return USAGE
        roots.append((package, root_path))
    embedder = HashedBagOfWordsEmbedder(config.embedding_dimension)
    manifest = build_index(roots, embedder, Path(args.out),
                           toolchain=config.project.toolchain)
    print(f"indexed {manifest.record_count} declarations into {args.out}")
    return OK


def cmd_search_query(args: argparse.Namespace) -> int:
    config = _load_config_arg(args.config)
    index_dir = Path(args.index) if args.index else config.index_dir
    if index_dir is None or not Path(index_dir).is_dir():
        print("no index directory (pass --index or set index_dir)", file=sys.stderr)
        return USAGE
    index = load_index(Path(index_dir))
    embedder = HashedBagOfWordsEmbedder(index.manifest.dimension)
    hits = semantic_search(index, embedder, args.text, k=args.k)
    for hit in hits:
        print(f"{hit.score:.4f}  {hit.record.name}  [{hit.record.package}]")
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="proverkit",
                                     description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", default=None, help="path to the YAML config file")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="serve the MCP tool server on stdio")
    serve.add_argument("--network", choices=["on", "off"], default=None)
    serve.set_defaults(func=cmd_serve)

    prove = sub.add_parser("prove", help="run one proving session")
    prove.add_argument("stub", help="Lean statement stub file")
    prove.add_argument("--statement", default=None, help="informal statement file")
    prove.add_argument("--mode", choices=list(MODE_ALIASES), default="informal")
    prove.add_argument("--budget", type=float, default=None)
    prove.add_argument("--out", default=None, help="session output directory")
    prove.add_argument("--driver-script", default=None,
                       help="scripted driver behavior (replay)")
    prove.set_defaults(func=cmd_prove)

    blueprint = sub.add_parser("blueprint", help="blueprint operations")
    blueprint.add_argument("action", choices=["parse", "validate", "order", "status"])
    blueprint.add_argument("file", help="blueprint document")
    blueprint.add_argument("--project", default=None,
                           help="Lean project root for status")
    blueprint.add_argument("--json", action="store_true",
                           help="emit the structured graph form (parse)")
    blueprint.set_defaults(func=cmd_blueprint)

    bench = sub.add_parser("bench", help="benchmark harness")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)
    bench_run = bench_sub.add_parser("run", help="run a manifest (sequential by default)")
    bench_run.add_argument("--manifest", required=True)
    bench_run.add_argument("--mode", choices=list(MODE_ALIASES), default=None)
    bench_run.add_argument("--out", default=None)
    bench_run.add_argument("--parallel", type=int, default=1,
                           help="run N problems concurrently, each with its "
                                "own bridge and budget")
    bench_run.set_defaults(func=cmd_bench_run)
    bench_rep = bench_sub.add_parser("report", help="rebuild a report from session logs")
    bench_rep.add_argument("--manifest", required=True)
    bench_rep.add_argument("--out", required=True, help="session log directory")
    bench_rep.add_argument("--export", default=None, help="write JSON export here")
    bench_rep.set_defaults(func=cmd_bench_report)

    search = sub.add_parser("search", help="declaration retrieval")
    search_sub = search.add_subparsers(dest="search_command", required=True)
    search_index = search_sub.add_parser("index", help="build an index")
    search_index.add_argument("roots", nargs="+",
                              help="package roots as name=path (or bare path)")
    search_index.add_argument("--out", required=True)
    search_index.set_defaults(func=cmd_search_index)
    search_query = search_sub.add_parser("query", help="query an index")
    search_query.add_argument("text")
    search_query.add_argument("--index", default=None)
    search_query.add_argument("-k", type=int, default=5)
    search_query.set_defaults(func=cmd_search_query)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, matching our usage code
        return int(exc.code or 0)
    try:
        if args.config is not None:
            load_config(args.config)  # a bad config is a usage error everywhere
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE
    except (BridgeError, bench_mod.ManifestError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAILED
    except KeyboardInterrupt:
        return FAILED


if __name__ == "__main__":
    raise SystemExit(main())

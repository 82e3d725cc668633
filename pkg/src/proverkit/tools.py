"""Registers the toolkit's tools on an MCP server instance.

Ten tools: the seven Lean bridge tools (outline, goal, diagnostics,
run-code, multi-attempt, local search, remote search), declaration
retrieval, the informal prover, and the discussion partner.  The Lean
session, retrieval index and provider clients are created lazily on
first use so ``tools/list`` works without a toolchain.
"""

from __future__ import annotations

import json
from pathlib import Path

from .config import Config
from .discussion import DiscussionRequest, discuss
from .informal import independent_sampling, refine_loop
from .leanbridge import FileLocation, LeanBridge
from .mcp import McpServer, ToolDescriptor, ToolResult, text_result
from .providers import Cassette, ChatClient, EndpointClient
from .retrieval import HashedBagOfWordsEmbedder, agentic_search, load_index, semantic_search


def _schema(properties: dict, required: list[str]) -> dict:
    return {"type": "object", "properties": properties, "required": required}


class ToolContext:
    """Lazily constructed shared state behind the tool handlers."""

    def __init__(self, config: Config):
        self.config = config
        self._bridge: LeanBridge | None = None
        self._index = None
        self._embedder = None
        self._clients: dict[str, ChatClient] = {}

    @property
    def bridge(self) -> LeanBridge:
        if self._bridge is None:
            self._bridge = LeanBridge(
                self.config.project.root,
                server_command=self.config.bridge_command(),
                settle_quiet=self.config.project.settle_quiet,
                settle_max=self.config.project.settle_max,
                run_code_timeout=self.config.project.run_code_timeout,
                attempt_timeout=self.config.project.attempt_timeout,
                network_enabled=self.config.network_enabled,
                loogle_endpoint=self.config.loogle_endpoint,
                stdlib_roots=self.config.project.stdlib_roots,
            )
        return self._bridge

    @property
    def index(self):
        if self._index is None:
            if self.config.index_dir is None:
                raise RuntimeError("no retrieval index configured (index_dir)")
            self._index = load_index(self.config.index_dir)
        return self._index

    @property
    def embedder(self):
        if self._embedder is None:
            self._embedder = HashedBagOfWordsEmbedder(self.config.embedding_dimension)
        return self._embedder

    def client(self, endpoint_id: str) -> ChatClient:
        if endpoint_id not in self._clients:
            endpoint = self.config.providers.endpoints.get(endpoint_id)
            if endpoint is None:
                raise KeyError(f"endpoint not configured: {endpoint_id}")
            cassette = None
            if self.config.cassette_dir is not None:
                cassette = Cassette(
                    Path(self.config.cassette_dir) / f"{endpoint_id}.jsonl",
                    mode=self.config.cassette_mode,
                )
            self._clients[endpoint_id] = EndpointClient(endpoint, cassette)
        return self._clients[endpoint_id]

    def partner_clients(self) -> dict[str, ChatClient]:
        return {pid: self.client(pid) for pid in self.config.providers.partners}

    def close(self) -> None:
        if self._bridge is not None:
            self._bridge.close()
            self._bridge = None


def _location(args: dict) -> FileLocation:
    return FileLocation(path=args["path"], line=int(args["line"]),
                        column=int(args["column"]))


def _diag_lines(diags) -> list[str]:
    return [
        f"{d.path}:{d.start_line}:{d.start_column}: {d.severity}: {d.message}"
        for d in diags
    ]


def register_tools(server: McpServer, ctx: ToolContext) -> None:
    loc_props = {
        "path": {"type": "string", "description": "project-relative file path"},
        "line": {"type": "integer", "description": "1-based line"},
        "column": {"type": "integer", "description": "1-based column"},
    }

    def lean_file_outline(args: dict) -> ToolResult:
        outline = ctx.bridge.file_outline(args["path"])
        lines = [f"{kind} {name} @ {loc.line}:{loc.column}" for kind, name, loc in outline]
        return text_result("\n".join(lines) if lines else "(empty outline)")

    server.register_tool(ToolDescriptor(
        name="lean_file_outline",
        description="List the declarations of a Lean file in document order.",
        input_schema=_schema({"path": loc_props["path"]}, ["path"]),
    ), lean_file_outline)

    def lean_goal(args: dict) -> ToolResult:
        goal = ctx.bridge.goal_at(_location(args))
        return text_result(goal.rendered if goal.goals else "no goals")

    server.register_tool(ToolDescriptor(
        name="lean_goal",
        description="Show the proof goals visible at a file position.",
        input_schema=_schema(loc_props, ["path", "line", "column"]),
    ), lean_goal)

    def lean_diagnostic_messages(args: dict) -> ToolResult:
        diags = ctx.bridge.diagnostics(args["path"])
        return text_result("\n".join(_diag_lines(diags)) if diags else "no diagnostics")

    server.register_tool(ToolDescriptor(
        name="lean_diagnostic_messages",
        description="Compiler diagnostics for a file after elaboration settles.",
        input_schema=_schema({"path": loc_props["path"]}, ["path"]),
    ), lean_diagnostic_messages)

    def lean_run_code(args: dict) -> ToolResult:
        result = ctx.bridge.run_code(
            args["snippet"], timeout=float(args.get("timeout", 0)) or None
        )
        status = "success" if result.success else ("timeout" if result.timed_out else "failure")
        blocks = [status]
        if result.diagnostics:
            blocks.append("\n".join(_diag_lines(result.diagnostics)))
        return ToolResult(content=blocks, is_error=False)

    server.register_tool(ToolDescriptor(
        name="lean_run_code",
        description="Elaborate a standalone Lean snippet in a scratch file.",
        input_schema=_schema({
            "snippet": {"type": "string"},
            "timeout": {"type": "number", "description": "seconds"},
        }, ["snippet"]),
    ), lean_run_code)

    def lean_multi_attempt(args: dict) -> ToolResult:
        results = ctx.bridge.multi_attempt(_location(args), list(args["snippets"]))
        blocks = []
        for res in results:
            status = "success" if res.success else ("timeout" if res.timed_out else "failure")
            detail = "; ".join(_diag_lines(res.diagnostics))
            blocks.append(f"{res.snippet!r}: {status}" + (f" ({detail})" if detail else ""))
        return ToolResult(content=blocks, is_error=False)

    server.register_tool(ToolDescriptor(
        name="lean_multi_attempt",
        description="Try several tactic snippets at one goal, each in isolation.",
        input_schema=_schema({
            **loc_props,
            "snippets": {"type": "array", "items": {"type": "string"}},
        }, ["path", "line", "column", "snippets"]),
    ), lean_multi_attempt)

    def lean_local_search(args: dict) -> ToolResult:
        matches = ctx.bridge.local_search(args["query"])
        lines = [f"{m.name} [{m.source}] {m.signature}" for m in matches]
        return text_result("\n".join(lines) if lines else "no matches")

    server.register_tool(ToolDescriptor(
        name="lean_local_search",
        description="Search declarations in the project and configured stdlib roots.",
        input_schema=_schema({"query": {"type": "string"}}, ["query"]),
    ), lean_local_search)

    def lean_loogle(args: dict) -> ToolResult:
        matches = ctx.bridge.loogle_search(args["query"])
        lines = [f"{m.name} [{m.source}] {m.signature}" for m in matches]
        return text_result("\n".join(lines) if lines else "no matches")

    server.register_tool(ToolDescriptor(
        name="lean_loogle",
        description="Query the remote Loogle service (requires network opt-in).",
        input_schema=_schema({"query": {"type": "string"}}, ["query"]),
    ), lean_loogle)

    def leandex_search(args: dict) -> ToolResult:
        query = args["query"]
        k = int(args.get("k", 5))
        if args.get("agentic"):
            outcome = agentic_search(ctx.index, ctx.embedder, query,
                                     ctx.client(ctx.config.providers.generator), k)
            hits = outcome.hits
            suffix = " (degraded to plain search)" if outcome.degraded else ""
        else:
            hits = semantic_search(ctx.index, ctx.embedder, query, k)
            suffix = ""
        lines = [
            f"{h.score:.4f} {h.record.name} [{h.record.package}] {h.record.signature}"
            for h in hits
        ]
        return text_result(("\n".join(lines) if lines else "no hits") + suffix)

    server.register_tool(ToolDescriptor(
        name="leandex_search",
        description="Semantic retrieval over indexed Lean declarations; "
                    "agentic mode reformulates the query with a model first.",
        input_schema=_schema({
            "query": {"type": "string"},
            "k": {"type": "integer"},
            "agentic": {"type": "boolean"},
        }, ["query"]),
    ), leandex_search)

    def informal_prover(args: dict) -> ToolResult:
        problem = args["problem"]
        mode = args.get("mode", "iterative")
        client = ctx.client(ctx.config.providers.generator)
        if mode == "iterative":
            session = refine_loop(
                problem, client,
                max_iterations=int(args.get("max_iterations",
                                            ctx.config.informal_max_iterations)),
                consensus=int(args.get("consensus", ctx.config.informal_consensus)),
                feedback_budget=ctx.config.feedback_budget,
            )
            outcome, solution = session.outcome, session.solution
            rounds = len(session.iterations)
        elif mode == "sampling":
            run = independent_sampling(
                problem, client,
                n_samples=int(args.get("n_samples",
                                       ctx.config.informal_max_iterations)),
                consensus=int(args.get("consensus", ctx.config.informal_consensus)),
            )
            outcome, solution = run.outcome, run.solution
            rounds = len(run.samples)
        else:
            return ToolResult(content=[f"unknown mode: {mode}"], is_error=True)
        blocks = [f"{outcome} after {rounds} rounds"]
        if solution:
            blocks.append(solution)
        return ToolResult(content=blocks, is_error=False)

    server.register_tool(ToolDescriptor(
        name="informal_prover",
        description="Produce a verified informal solution by iterative "
                    "refinement (or independent sampling).",
        input_schema=_schema({
            "problem": {"type": "string"},
            "mode": {"type": "string", "enum": ["iterative", "sampling"]},
            "max_iterations": {"type": "integer"},
            "n_samples": {"type": "integer"},
            "consensus": {"type": "integer"},
        }, ["problem"]),
    ), informal_prover)

    def discuss_partner(args: dict) -> ToolResult:
        partners = list(args.get("partners") or ctx.config.providers.partners)
        req = DiscussionRequest(
            context=args["context"],
            partners=partners,
            per_partner_timeout=float(args.get("timeout", ctx.config.discussion_timeout)),
            context_cap=ctx.config.discussion_context_cap,
        )
        outcome = discuss(req, ctx.partner_clients())
        blocks = [
            json.dumps({"partner": s.partner, "status": s.status, "idea": s.idea},
                       ensure_ascii=False)
            for s in outcome.suggestions
        ]
        return ToolResult(content=blocks, is_error=False)

    server.register_tool(ToolDescriptor(
        name="discuss_partner",
        description="Consult external partner models about a stuck proof state.",
        input_schema=_schema({
            "context": {"type": "string"},
            "partners": {"type": "array", "items": {"type": "string"}},
            "timeout": {"type": "number"},
        }, ["context"]),
    ), discuss_partner)


def build_server(config: Config) -> tuple[McpServer, ToolContext]:
    server = McpServer(name=config.server_name, version=config.server_version)
    ctx = ToolContext(config)
    register_tools(server, ctx)
    return server, ctx

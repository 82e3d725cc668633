"""Configuration: one YAML file, documented schema, strict keys.

Secrets never live in the file; endpoints reference the *name* of an
environment variable that holds the API key, and that variable is read
only at call time.  Unknown keys are rejected so typos fail loudly, and
every referenced path is validated at load.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .providers import ModelEndpoint

PROTOCOL_VERSION_PIN = "2024-11-05"  # MCP revision this server targets

MOCK_SERVER_COMMAND = [sys.executable, "-m", "proverkit.leanbridge.mockserver"]


class ConfigError(ValueError):
    pass


@dataclass
class ProjectConfig:
    root: Path = Path(".")
    server_command: list[str] = field(default_factory=lambda: ["lake", "serve", "--"])
    settle_quiet: float = 0.5
    settle_max: float = 120.0
    run_code_timeout: float = 60.0
    attempt_timeout: float = 30.0
    stdlib_roots: list[Path] = field(default_factory=list)
    toolchain: str = "lean4/v4.26.0"


@dataclass
class ProviderConfig:
    endpoints: dict[str, ModelEndpoint] = field(default_factory=dict)
    # role bindings; the shipped defaults document the intended models but
    # carry no credentials and are never contacted in replay mode
    generator: str = "gemini-3-pro-preview"
    verifier: str = "gemini-3-pro-preview"
    hint: str = "gpt-5.2"
    partners: list[str] = field(default_factory=list)


@dataclass
class Config:
    server_name: str = "proverkit"
    server_version: str = "0.1.0"
    protocol_version: str = PROTOCOL_VERSION_PIN
    project: ProjectConfig = field(default_factory=ProjectConfig)
    providers: ProviderConfig = field(default_factory=ProviderConfig)
    network_enabled: bool = False
    loogle_endpoint: str = "https://loogle.lean-lang.org/json"
    index_dir: Path | None = None
    embedding_dimension: int = 256
    default_budget: float = 50.0
    cassette_mode: str = "replay"
    cassette_dir: Path | None = None
    informal_max_iterations: int = 20
    informal_consensus: int = 3
    feedback_budget: int = 8000
    discussion_context_cap: int = 32_000
    discussion_timeout: float = 60.0
    use_mock_server: bool = False

    def bridge_command(self) -> list[str]:
        if self.use_mock_server:
            return list(MOCK_SERVER_COMMAND)
        return list(self.project.server_command)


_TOP_KEYS = {
    "server_name", "server_version", "protocol_version", "project", "providers",
    "network_enabled", "loogle_endpoint", "index_dir", "embedding_dimension",
    "default_budget", "cassette_mode", "cassette_dir", "informal_max_iterations",
    "informal_consensus", "feedback_budget", "discussion_context_cap",
    "discussion_timeout", "use_mock_server",
}
_PROJECT_KEYS = {
    "root", "server_command", "settle_quiet", "settle_max", "run_code_timeout",
    "attempt_timeout", "stdlib_roots", "toolchain",
}
_PROVIDER_KEYS = {"endpoints", "generator", "verifier", "hint", "partners"}
_ENDPOINT_KEYS = {
    "id", "base_url", "model", "auth_env", "price_in", "price_out",
    "timeout", "temperature",
}


def _reject_unknown(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(sorted(unknown))}")


def load_config(path: Path | str | None = None) -> Config:
    """Load and validate a config file; None gives built-in defaults."""
    if path is None:
        return Config()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    _reject_unknown(raw, _TOP_KEYS, "config")

    config = Config()
    base = path.parent

    project_raw = raw.get("project", {}) or {}
    _reject_unknown(project_raw, _PROJECT_KEYS, "project")
    project = ProjectConfig()
    if "root" in project_raw:
        project.root = (base / project_raw["root"]).resolve()
        if not project.root.is_dir():
            raise ConfigError(f"project root does not exist: {project.root}")
    for key in ("settle_quiet", "settle_max", "run_code_timeout", "attempt_timeout"):
        if key in project_raw:
            setattr(project, key, float(project_raw[key]))
    if "server_command" in project_raw:
        project.server_command = [str(p) for p in project_raw["server_command"]]
    if "toolchain" in project_raw:
        project.toolchain = str(project_raw["toolchain"])
    for root in project_raw.get("stdlib_roots", []):
        resolved = (base / root).resolve()
        if not resolved.is_dir():
            raise ConfigError(f"stdlib root does not exist: {resolved}")
        project.stdlib_roots.append(resolved)
    config.project = project

    providers_raw = raw.get("providers", {}) or {}
    _reject_unknown(providers_raw, _PROVIDER_KEYS, "providers")
    providers = ProviderConfig()
    for spec in providers_raw.get("endpoints", []):
        _reject_unknown(spec, _ENDPOINT_KEYS, "endpoint")
        endpoint = ModelEndpoint(
            id=spec["id"],
            base_url=spec.get("base_url", ""),
            model=spec.get("model", spec["id"]),
            auth_env=spec.get("auth_env", ""),
            price_in=float(spec.get("price_in", 0.0)),
            price_out=float(spec.get("price_out", 0.0)),
            timeout=float(spec.get("timeout", 120.0)),
            temperature=float(spec.get("temperature", 1.0)),
        )
        if endpoint.id in providers.endpoints:
            raise ConfigError(f"duplicate endpoint id: {endpoint.id}")
        providers.endpoints[endpoint.id] = endpoint
    for role in ("generator", "verifier", "hint"):
        if role in providers_raw:
            setattr(providers, role, str(providers_raw[role]))
    providers.partners = [str(p) for p in providers_raw.get("partners", [])]
    config.providers = providers

    for key in ("server_name", "server_version", "protocol_version",
                "loogle_endpoint", "cassette_mode"):
        if key in raw:
            setattr(config, key, str(raw[key]))
    if config.cassette_mode not in ("record", "replay", "live"):
        raise ConfigError(f"unknown cassette mode: {config.cassette_mode}")
    for key in ("network_enabled", "use_mock_server"):
        if key in raw:
            setattr(config, key, bool(raw[key]))
    for key in ("embedding_dimension", "informal_max_iterations",
                "informal_consensus", "feedback_budget", "discussion_context_cap"):
        if key in raw:
            setattr(config, key, int(raw[key]))
    for key in ("default_budget", "discussion_timeout"):
        if key in raw:
            setattr(config, key, float(raw[key]))
    if "index_dir" in raw and raw["index_dir"]:
        config.index_dir = (base / raw["index_dir"]).resolve()
    if "cassette_dir" in raw and raw["cassette_dir"]:
        config.cassette_dir = (base / raw["cassette_dir"]).resolve()
        if not config.cassette_dir.is_dir():
            raise ConfigError(f"cassette dir does not exist: {config.cassette_dir}")
    return config

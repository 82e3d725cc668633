"""Declaration index: build, persist, load.

Layout of an index directory:

    manifest.json   toolchain, packages, embedding model, dimension, count
    records.jsonl   one declaration per line, in vector order
    vectors.bin     float32 little-endian, record i at offset i*dimension*4

The index is immutable once built; rebuilding is the only mutation.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..leanbridge.scanner import scan_project
from .embedder import Embedder

log = logging.getLogger(__name__)

RECORD_KINDS = ("theorem", "lemma", "def", "structure", "instance", "abbrev")


@dataclass(frozen=True)
class DeclRecord:
    name: str
    kind: str
    signature: str
    doc: str
    package: str

    @property
    def indexed_text(self) -> str:
        return " ".join(part for part in (self.name, self.signature, self.doc) if part)


@dataclass(frozen=True)
class IndexManifest:
    toolchain: str
    packages: tuple[tuple[str, str], ...]  # (package, revision)
    embedding_model: str
    dimension: int
    record_count: int

    def __post_init__(self) -> None:
        if self.dimension <= 0:
            raise ValueError("dimension must be positive")
        if self.record_count < 0:
            raise ValueError("record_count must be non-negative")


class IndexLoadError(RuntimeError):
    pass


@dataclass
class LeanIndex:
    manifest: IndexManifest
    records: list[DeclRecord]
    vectors: np.ndarray  # (record_count, dimension) float32

    def __post_init__(self) -> None:
        if len(self.records) != self.manifest.record_count:
            raise IndexLoadError("record count does not match manifest")
        if self.vectors.shape != (len(self.records), self.manifest.dimension):
            raise IndexLoadError("vector block shape does not match manifest")


def build_index(
    package_roots: list[tuple[str, Path]],
    embedder: Embedder,
    out_dir: Path,
    toolchain: str = "lean4/v4.26.0",
    revisions: dict[str, str] | None = None,
) -> IndexManifest:
    """Scan declaration headers under each package root, embed, persist.

    Indexed text per declaration is "name + signature + doc".  Unreadable
    sources are skipped and counted; an embedding failure aborts the build
    and removes the partial index directory.
    """
    revisions = revisions or {}
    records: list[DeclRecord] = []
    seen: set[tuple[str, str]] = set()
    skipped = 0
    for package, root in package_roots:
        root = Path(root)
        if not root.exists():
            raise FileNotFoundError(f"package root does not exist: {root}")
        for header in scan_project(root):
            if header.kind not in RECORD_KINDS:
                continue
            key = (header.name, package)
            if key in seen:
                skipped += 1
                continue
            seen.add(key)
            records.append(DeclRecord(
                name=header.name,
                kind=header.kind,
                signature=header.signature,
                doc=header.doc,
                package=package,
            ))
    if skipped:
        log.warning("skipped %d duplicate declarations", skipped)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if records:
            vectors = embedder.embed([r.indexed_text for r in records])
        else:
            vectors = np.zeros((0, embedder.dimension), dtype=np.float32)
        manifest = IndexManifest(
            toolchain=toolchain,
            packages=tuple((p, revisions.get(p, "unpinned")) for p, _ in package_roots),
            embedding_model=embedder.model_id,
            dimension=embedder.dimension,
            record_count=len(records),
        )
        _write_index(out_dir, manifest, records, vectors)
    except Exception:
        for name in ("manifest.json", "records.jsonl", "vectors.bin"):
            (out_dir / name).unlink(missing_ok=True)
        raise
    return manifest


def _write_index(out_dir: Path, manifest: IndexManifest,
                 records: list[DeclRecord], vectors: np.ndarray) -> None:
    (out_dir / "manifest.json").write_text(json.dumps({
        "toolchain": manifest.toolchain,
        "packages": [list(p) for p in manifest.packages],
        "embedding_model": manifest.embedding_model,
        "dimension": manifest.dimension,
        "record_count": manifest.record_count,
    }, indent=2), encoding="utf-8")
    with (out_dir / "records.jsonl").open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps({
                "name": record.name,
                "kind": record.kind,
                "signature": record.signature,
                "doc": record.doc,
                "package": record.package,
            }, ensure_ascii=False) + "\n")
    vectors.astype("<f4").tofile(out_dir / "vectors.bin")


def load_index(index_dir: Path) -> LeanIndex:
    index_dir = Path(index_dir)
    manifest_path = index_dir / "manifest.json"
    if not manifest_path.exists():
        raise IndexLoadError(f"no index manifest at {manifest_path}")
    raw = json.loads(manifest_path.read_text(encoding="utf-8"))
    manifest = IndexManifest(
        toolchain=raw["toolchain"],
        packages=tuple(tuple(p) for p in raw["packages"]),
        embedding_model=raw["embedding_model"],
        dimension=raw["dimension"],
        record_count=raw["record_count"],
    )
    records = []
    records_path = index_dir / "records.jsonl"
    if records_path.exists():
        for line in records_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                records.append(DeclRecord(**json.loads(line)))
    vectors = np.fromfile(index_dir / "vectors.bin", dtype="<f4")
    vectors = vectors.reshape((manifest.record_count, manifest.dimension))
    return LeanIndex(manifest=manifest, records=records, vectors=vectors)

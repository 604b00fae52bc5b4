"""Binary persistence for libraries, plus the companion build manifest.

Layout (all integers little-endian, all floats little-endian float32):

    magic   4 bytes  b"SPLB"
    u32     format version (currently 1)
    u32     key_dim
    u32     prefix_len
    u32     model_dim
    u32     embedding_count
    u64     entry_count
    per embedding, in ascending id order:
        u32 + UTF-8 bytes   id
        u32 + UTF-8 bytes   metadata as canonical JSON (sorted keys)
        prefix_len * model_dim f32, row-major
    per entry, in ordinal order:
        u32                 embedding ordinal (index into the id-sorted list)
        key_dim f32         key vector

save/load round-trips every stored value bit-exactly. A JSON manifest with
the build config and provenance notes is written next to the library file.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .library import LibraryConfig, LibraryEntry, PromptEmbedding, SourcePromptLibrary

MAGIC = b"SPLB"
FORMAT_VERSION = 1


def manifest_path(path) -> Path:
    return Path(str(path) + ".manifest.json")


def save_library(library: SourcePromptLibrary, path, *, provenance: dict | None = None) -> None:
    """Write the binary library file and its JSON manifest."""
    path = Path(path)
    ids = library.embedding_ids()
    ordinal_of = {eid: i for i, eid in enumerate(ids)}

    out = bytearray()
    out += MAGIC
    out += struct.pack(
        "<IIIIIQ",
        FORMAT_VERSION,
        library.key_dim,
        library.prefix_len,
        library.model_dim,
        len(ids),
        len(library.entries),
    )
    for eid in ids:
        emb = library.embeddings[eid]
        id_bytes = eid.encode("utf-8")
        meta_bytes = json.dumps(emb.metadata, sort_keys=True, separators=(",", ":")).encode("utf-8")
        out += struct.pack("<I", len(id_bytes)) + id_bytes
        out += struct.pack("<I", len(meta_bytes)) + meta_bytes
        out += np.ascontiguousarray(emb.matrix, dtype="<f4").tobytes()
    for entry in library.entries:
        out += struct.pack("<I", ordinal_of[entry.embedding_id])
        out += np.ascontiguousarray(entry.key, dtype="<f4").tobytes()

    path.write_bytes(bytes(out))

    manifest = {
        "version": FORMAT_VERSION,
        "build_config": {
            "n_per_prompt": library.config.n_per_prompt,
            "sampling_method": library.config.sampling_method,
            "seed": library.config.seed,
        },
        "provenance": provenance or {},
    }
    manifest_path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


class _Reader:
    """Byte cursor that reports the offset of the first missing byte."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(
                f"truncated library file: needed {n} bytes at offset {self.pos}, "
                f"file ends at {len(self.data)}",
                code="truncated",
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f32s(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(4 * count), dtype="<f4").copy()


def load_library(path) -> SourcePromptLibrary:
    """Read a library file written by :func:`save_library`.

    Rejects unknown magic/version (naming found vs expected) and truncated
    payloads (naming the byte offset).
    """
    data = Path(path).read_bytes()
    r = _Reader(data)

    magic = r.take(4)
    if magic != MAGIC:
        raise FormatError(f"bad magic: found {magic!r}, expected {MAGIC!r}", code="magic_mismatch")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise FormatError(
            f"unsupported format version: found {version}, expected {FORMAT_VERSION}",
            code="version_mismatch",
        )
    key_dim = r.u32()
    prefix_len = r.u32()
    model_dim = r.u32()
    embedding_count = r.u32()
    entry_count = r.u64()

    ids: list[str] = []
    embeddings: dict[str, PromptEmbedding] = {}
    for _ in range(embedding_count):
        eid = r.take(r.u32()).decode("utf-8")
        try:
            metadata = json.loads(r.take(r.u32()).decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"embedding {eid!r} carries invalid metadata JSON: {exc}", code="bad_json") from exc
        matrix = r.f32s(prefix_len * model_dim).reshape(prefix_len, model_dim)
        ids.append(eid)
        embeddings[eid] = PromptEmbedding(id=eid, matrix=matrix, metadata=metadata)

    entries: list[LibraryEntry] = []
    for ordinal in range(entry_count):
        emb_ordinal = r.u32()
        if emb_ordinal >= len(ids):
            raise FormatError(
                f"entry {ordinal} references embedding ordinal {emb_ordinal}, "
                f"only {len(ids)} embeddings present",
                code="bad_field",
            )
        key = r.f32s(key_dim)
        entries.append(LibraryEntry(key=key, embedding_id=ids[emb_ordinal], ordinal=ordinal))

    if r.pos != len(data):
        raise FormatError(
            f"{len(data) - r.pos} trailing bytes after offset {r.pos}",
            code="trailing_bytes",
        )

    # Without a manifest the sampling config is unknown; size n_per_prompt to
    # the observed per-embedding maximum so validation cannot reject the load.
    per_embedding = {eid: 0 for eid in ids}
    for entry in entries:
        per_embedding[entry.embedding_id] += 1
    observed = max(per_embedding.values(), default=0)
    config = LibraryConfig(n_per_prompt=max(observed, LibraryConfig().n_per_prompt))
    mpath = manifest_path(path)
    if mpath.exists():
        try:
            manifest = json.loads(mpath.read_text(encoding="utf-8"))
            bc = manifest.get("build_config", {})
            config = LibraryConfig(
                n_per_prompt=int(bc.get("n_per_prompt", config.n_per_prompt)),
                sampling_method=str(bc.get("sampling_method", config.sampling_method)),
                seed=int(bc.get("seed", config.seed)),
            )
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise FormatError(f"invalid manifest {mpath}: {exc}", code="bad_json") from exc

    return SourcePromptLibrary(key_dim=key_dim, embeddings=embeddings, entries=entries, config=config)

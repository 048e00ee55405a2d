"""Shared helpers for self-describing stage artifacts.

Every file a pipeline stage writes embeds a short hash of the
parameters that produced it plus the hash of its upstream artifact, so
downstream stages can reject inputs that were built under a different
configuration.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence


class ArtifactError(Exception):
    """Raised for malformed artifact files or configuration mismatches."""


def params_hash(params: dict) -> str:
    canonical = json.dumps(params, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def _format_meta(meta: dict[str, str]) -> str:
    return " ".join(f"{key}={value}" for key, value in meta.items())


def _parse_meta(text: str) -> dict[str, str]:
    meta = {}
    for part in text.split():
        if "=" not in part:
            raise ArtifactError(f"malformed artifact header field: {part!r}")
        key, _, value = part.partition("=")
        meta[key] = value
    return meta


def write_tsv(
    path: str | Path,
    kind: str,
    meta: dict[str, str],
    columns: Sequence[str],
    rows: Iterable[Sequence[str]],
) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"# eventpairs:{kind} {_format_meta(meta)}\n")
        handle.write("# columns: " + "\t".join(columns) + "\n")
        for row in rows:
            cells = [str(cell) for cell in row]
            for cell in cells:
                if "\t" in cell or "\n" in cell:
                    raise ArtifactError(f"tab or newline in TSV cell: {cell!r}")
            handle.write("\t".join(cells) + "\n")


def read_tsv(path: str | Path, kind: str) -> tuple[dict[str, str], list[str], list[list[str]]]:
    with open(path, encoding="utf-8") as handle:
        first = handle.readline()
        prefix = f"# eventpairs:{kind} "
        if not first.startswith(prefix):
            raise ArtifactError(f"{path}: not an eventpairs '{kind}' file")
        meta = _parse_meta(first[len(prefix):].strip())
        second = handle.readline()
        if not second.startswith("# columns: "):
            raise ArtifactError(f"{path}: missing column header")
        columns = second[len("# columns: "):].rstrip("\n").split("\t")
        rows = []
        for line in handle:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cells = line.split("\t")
            if len(cells) != len(columns):
                raise ArtifactError(
                    f"{path}: row has {len(cells)} cells, expected {len(columns)}"
                )
            rows.append(cells)
    return meta, columns, rows


def check_upstream(path: str | Path, declared: str, actual: str, what: str) -> None:
    if declared != actual:
        raise ArtifactError(
            f"{path}: {what} was produced under a different configuration "
            f"(expected hash {actual}, found {declared})"
        )

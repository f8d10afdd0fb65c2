"""
Run manifests written next to every command output.

``<output>.manifest.json`` records the tool version, the subcommand, the full
argument vector, the seed, UTC start and end times, and the SHA-256 digest of
every input file and of the output itself.
"""

import hashlib
import os
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from typing import Any, Optional, Sequence

from microstat import __version__
from microstat.infrastructure.data.writers.files import write_json

DIGEST_ALGORITHM = "sha256"
MANIFEST_SUFFIX = ".manifest.json"


def file_digest(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class RunManifest:
    """
    Provenance of one output file.

    Args:
        subcommand: CLI subcommand that produced the output
        argv: Full argument vector after the program name
        inputs: Input path -> digest
        output: Output path
        output_digest: Digest of the output file
        seed: Seed the command ran with (None if it uses no randomness)
        started_at: UTC start time (ISO 8601)
        finished_at: UTC end time (ISO 8601)
        tool_version: microstat version
        digest_algorithm: Hash used for every digest
    """

    subcommand: str
    argv: tuple[str, ...]
    inputs: dict[str, str]
    output: str
    output_digest: str
    seed: Optional[int]
    started_at: str
    finished_at: str
    tool_version: str = __version__
    digest_algorithm: str = DIGEST_ALGORITHM

    def to_dict(self) -> dict[str, Any]:
        record = asdict(self)
        record["argv"] = list(self.argv)
        return record


def manifest_path(output: str) -> str:
    return output + MANIFEST_SUFFIX


def write_manifests(
    subcommand: str,
    argv: Sequence[str],
    inputs: Sequence[str],
    outputs: Sequence[str],
    seed: Optional[int],
    started_at: str,
) -> list[str]:
    """
    Write one manifest per existing output and return the manifest paths.

    Missing inputs are recorded with an empty digest.
    """
    digests = {
        os.path.abspath(p): file_digest(p) if os.path.isfile(p) else "" for p in inputs
    }
    finished_at = utc_now()
    written = []
    for output in outputs:
        if not os.path.isfile(output):
            continue
        manifest = RunManifest(
            subcommand=subcommand,
            argv=tuple(argv),
            inputs=digests,
            output=os.path.abspath(output),
            output_digest=file_digest(output),
            seed=seed,
            started_at=started_at,
            finished_at=finished_at,
        )
        path = manifest_path(output)
        write_json(path, manifest.to_dict())
        written.append(path)
    return written

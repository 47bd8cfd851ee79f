"""
Checkpoint files and simulated worker failure.

File layout (all integers big-endian):

    b"PGCK" | version u16 | tag (u32 length + utf-8) | superstep u64 |
    section count u32 | per section: name (u32 length + utf-8),
    body (u64 length + pickle) | crc32 u32 over everything before it

The superstep field is the next superstep to run, so resuming from a file
named `<tag>-000004.ckpt` re-executes superstep 4.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union
import logging
import os
import pickle
import struct
import tempfile
import zlib

from ..errors import CheckpointError, RestoreError, WorkerFailure

logger = logging.getLogger(__name__)

MAGIC = b"PGCK"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    """Run state captured at a barrier."""
    tag: str
    superstep: int
    sections: Dict[str, Any]


def _pack_text(text: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack(">I", len(raw)) + raw


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    parts = [
        MAGIC,
        struct.pack(">H", FORMAT_VERSION),
        _pack_text(checkpoint.tag),
        struct.pack(">Q", checkpoint.superstep),
        struct.pack(">I", len(checkpoint.sections)),
    ]
    for name, value in checkpoint.sections.items():
        body = pickle.dumps(value, protocol=pickle.HIGHEST_PROTOCOL)
        parts.append(_pack_text(name))
        parts.append(struct.pack(">Q", len(body)))
        parts.append(body)
    payload = b"".join(parts)
    return payload + struct.pack(">I", zlib.crc32(payload))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise RestoreError("checkpoint is truncated")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str) -> int:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))[0]

    def text(self) -> str:
        return self.take(self.unpack(">I")).decode("utf-8")


def decode_checkpoint(data: bytes) -> Checkpoint:
    if len(data) < len(MAGIC) + 4 or data[:len(MAGIC)] != MAGIC:
        raise RestoreError("not a checkpoint file")
    body, trailer = data[:-4], data[-4:]
    if zlib.crc32(body) != struct.unpack(">I", trailer)[0]:
        raise RestoreError("checkpoint checksum mismatch")

    reader = _Reader(body)
    reader.take(len(MAGIC))
    version = reader.unpack(">H")
    if version != FORMAT_VERSION:
        raise RestoreError(f"unsupported checkpoint version {version}")
    tag = reader.text()
    superstep = reader.unpack(">Q")
    sections: Dict[str, Any] = {}
    for _ in range(reader.unpack(">I")):
        name = reader.text()
        try:
            sections[name] = pickle.loads(reader.take(reader.unpack(">Q")))
        except (pickle.UnpicklingError, EOFError, AttributeError, ImportError) as e:
            raise RestoreError(f"section '{name}' is corrupt: {e}") from e
    return Checkpoint(tag=tag, superstep=superstep, sections=sections)


def checkpoint_path(directory: Union[str, Path], tag: str, superstep: int) -> Path:
    safe_tag = "".join(c if c.isalnum() or c in "-_." else "_" for c in tag)
    return Path(directory) / f"{safe_tag}-{superstep:06d}.ckpt"


def write_checkpoint(checkpoint: Checkpoint, directory: Union[str, Path]) -> Path:
    """
    Persist a checkpoint atomically (temp file in the target directory, then rename).

    Returns:
        Path of the written file
    """
    target = checkpoint_path(directory, checkpoint.tag, checkpoint.superstep)
    try:
        data = encode_checkpoint(checkpoint)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, temp_name = tempfile.mkstemp(dir=target.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(data)
            os.replace(temp_name, target)
        except BaseException:
            if os.path.exists(temp_name):
                os.unlink(temp_name)
            raise
    except (OSError, pickle.PicklingError, TypeError, AttributeError) as e:
        raise CheckpointError(f"could not write checkpoint {target}: {e}") from e
    return target


def read_checkpoint(path: Union[str, Path], expected_tag: Optional[str] = None) -> Checkpoint:
    """Load a checkpoint file; raises RestoreError on corruption or tag mismatch."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise RestoreError(f"could not read checkpoint {path}: {e}") from e
    checkpoint = decode_checkpoint(data)
    if expected_tag is not None and checkpoint.tag != expected_tag:
        raise RestoreError(f"checkpoint tag '{checkpoint.tag}' does not match engine tag '{expected_tag}'")
    return checkpoint


class CheckpointManager:
    """Writes a checkpoint every `interval` completed supersteps and remembers the latest."""

    def __init__(self, tag: str, interval: Optional[int], directory: Union[str, Path],
                 strict: bool = False):
        self.tag = tag
        self.interval = interval
        self.directory = Path(directory)
        self.strict = strict
        self.written: List[Path] = []

    @property
    def enabled(self) -> bool:
        return bool(self.interval)

    def maybe_save(self, completed: int, snapshot: Callable[[], Dict[str, Any]]) -> Optional[Path]:
        """Checkpoint after `completed` supersteps if the interval says so."""
        if not self.enabled or completed % self.interval != 0:
            return None
        try:
            path = write_checkpoint(Checkpoint(self.tag, completed, snapshot()), self.directory)
        except CheckpointError as e:
            if self.strict:
                raise
            logger.warning(f"Checkpoint skipped: {e}")
            return None
        self.written.append(path)
        logger.debug(f"Wrote checkpoint {path}")
        return path

    def latest(self) -> Optional[Checkpoint]:
        """Most recent checkpoint written by this manager, if any."""
        if not self.written:
            return None
        return read_checkpoint(self.written[-1], expected_tag=self.tag)


class FaultInjector:
    """Kills one worker once, when it finishes its compute phase in the given superstep."""

    def __init__(self, kill_at_superstep: Optional[int] = None, worker: int = 0):
        self.kill_at_superstep = kill_at_superstep
        self.worker = worker
        self.fired = False

    def check(self, superstep: int, worker: int) -> None:
        if self.fired or self.kill_at_superstep is None:
            return
        if superstep == self.kill_at_superstep and worker == self.worker:
            self.fired = True
            raise WorkerFailure(worker, superstep)

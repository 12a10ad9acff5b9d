"""
Artifact Storage for SplitReg.

This module writes and reads JSON artifacts and text outputs. Files are
written to a temporary sibling first and renamed into place, so a file that
exists is always complete.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import aiofiles
import aiofiles.os

from core.errors import ArtifactError

PathLike = Union[str, Path]
CHUNK_SIZE = 1 << 16


def dumps_canonical(payload: Dict[str, Any]) -> str:
    """Serialize with sorted keys and fixed indentation so reruns are byte-identical."""
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


class ArtifactStorage:
    """Handles storage and retrieval of fit, tuning and experiment artifacts."""

    def __init__(self, config: Dict[str, Any]):
        """Initialize artifact storage rooted at SPLITREG_OUTPUT_PATH."""
        self.config = config
        self.output_path = Path(config.get("SPLITREG_OUTPUT_PATH", "./results"))
        self.logger = logging.getLogger(__name__)

    def resolve(self, path: PathLike) -> Path:
        """Relative paths are taken under the output directory."""
        path = Path(path)
        return path if path.is_absolute() else self.output_path / path

    async def save_text(self, path: PathLike, content: str) -> Path:
        """
        Atomically write a text file.

        Args:
            path: target file, relative to the output directory unless absolute
            content: text to write

        Returns:
            The path written

        Raises:
            ArtifactError: the file cannot be written
        """
        target = self.resolve(path)
        temporary = target.with_name(f".{target.name}.tmp")
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            async with aiofiles.open(temporary, "w", encoding="utf-8", newline="\n") as f:
                await f.write(content)
            await aiofiles.os.replace(temporary, target)
        except OSError as e:
            self.logger.error(f"Error writing {target}: {e}")
            raise ArtifactError(f"Cannot write {target}: {e}") from e

        self.logger.info(f"Saved {target}")
        return target

    async def save_json(self, path: PathLike, payload: Dict[str, Any]) -> Path:
        """Atomically write a JSON artifact with sorted keys."""
        try:
            content = dumps_canonical(payload)
        except (TypeError, ValueError) as e:
            raise ArtifactError(f"Artifact is not JSON serializable: {e}") from e
        return await self.save_text(path, content)

    async def load_json(self, path: PathLike) -> Dict[str, Any]:
        """
        Load a JSON artifact.

        Raises:
            ArtifactError: missing file or invalid JSON
        """
        source = Path(path)
        if not source.exists():
            raise ArtifactError(f"Artifact {source} not found")
        try:
            async with aiofiles.open(source, "r", encoding="utf-8") as f:
                content = await f.read()
            return json.loads(content)
        except json.JSONDecodeError as e:
            self.logger.error(f"Invalid JSON in {source}: {e}")
            raise ArtifactError(f"Invalid JSON in {source}: {e}") from e
        except OSError as e:
            raise ArtifactError(f"Cannot read {source}: {e}") from e

    async def file_digest(self, path: PathLike, algorithm: str = "sha256") -> str:
        """Hex digest of a file's bytes, used to record input provenance."""
        digest = hashlib.new(algorithm)
        try:
            async with aiofiles.open(Path(path), "rb") as f:
                while True:
                    chunk = await f.read(CHUNK_SIZE)
                    if not chunk:
                        break
                    digest.update(chunk)
        except OSError as e:
            raise ArtifactError(f"Cannot read {path}: {e}") from e
        return digest.hexdigest()

    async def exists(self, path: PathLike) -> bool:
        return await aiofiles.os.path.exists(self.resolve(path))

    def describe(self, path: Optional[PathLike] = None) -> Dict[str, Any]:
        """Location and size of an artifact, or of the output directory."""
        target = self.resolve(path) if path is not None else self.output_path
        return {
            "path": str(target),
            "exists": target.exists(),
            "size": target.stat().st_size if target.is_file() else None,
        }

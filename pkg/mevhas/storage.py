import json
import logging
import os
from typing import Any, Optional

import aiofiles

from .partition_map import PartitionMap, map_filename, serialize_map

logger = logging.getLogger(__name__)


class StorageError(ValueError):
    """An artifact path is invalid or escapes the storage root."""


class StorageBackend:
    """Base artifact storage interface"""

    async def save_text(self, relative_path: str, text: str) -> str:
        raise NotImplementedError

    async def load_text(self, relative_path: str) -> Optional[str]:
        raise NotImplementedError

    async def save_json(self, relative_path: str, data: Any) -> str:
        text = json.dumps(data, indent=2, sort_keys=True) + "\n"
        return await self.save_text(relative_path, text)

    async def save_map(self, directory: str, stem: str, frame_index: int, partition_map: PartitionMap) -> str:
        return await self.save_text(os.path.join(directory, map_filename(stem, frame_index)), serialize_map(partition_map))


class FileStorage(StorageBackend):
    """File-based artifact storage rooted at one output directory"""

    def __init__(self, root_dir: str = "./results"):
        self.root_dir = os.path.abspath(root_dir)

    def _get_file_path(self, relative_path: str) -> str:
        if not relative_path or os.path.isabs(relative_path):
            raise StorageError(f"artifact path must be relative to {self.root_dir}, got '{relative_path}'")
        path = os.path.abspath(os.path.join(self.root_dir, relative_path))
        if os.path.commonpath([self.root_dir, path]) != self.root_dir:
            raise StorageError(f"artifact path '{relative_path}' escapes {self.root_dir}")
        return path

    async def save_text(self, relative_path: str, text: str) -> str:
        file_path = self._get_file_path(relative_path)
        os.makedirs(os.path.dirname(file_path), exist_ok=True)
        async with aiofiles.open(file_path, "w", encoding="utf-8", newline="") as f:
            await f.write(text)
        logger.info(f"Wrote {file_path}")
        return file_path

    async def load_text(self, relative_path: str) -> Optional[str]:
        file_path = self._get_file_path(relative_path)
        if not os.path.exists(file_path):
            return None
        async with aiofiles.open(file_path, "r", encoding="utf-8") as f:
            return await f.read()

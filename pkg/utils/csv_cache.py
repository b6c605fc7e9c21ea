"""
Cache of parsed run artefacts (fields.csv, trajectories.csv, report.txt).
An entry is reused while the file's (mtime, size) stamp is unchanged, so a
rewritten artefact is always parsed again.
"""
import os
import logging
from typing import Any, Callable, Dict, Optional, Tuple

logger = logging.getLogger(__name__)

Stamp = Tuple[float, int]


def _stamp(file_path: str) -> Optional[Stamp]:
    try:
        info = os.stat(file_path)
    except FileNotFoundError:
        return None
    return info.st_mtime, info.st_size


class ArtefactCache:
    """Parsed artefacts keyed by absolute path"""

    def __init__(self, max_entries: int = 32):
        self.max_entries = max_entries
        self._entries: Dict[str, Tuple[Stamp, Any]] = {}

    def is_stale(self, file_path: str) -> bool:
        """True when the file is not cached or changed since it was parsed"""
        entry = self._entries.get(os.path.abspath(file_path))
        return entry is None or entry[0] != _stamp(file_path)

    def load(self, file_path: str, parser: Callable[[str], Any]) -> Any:
        """
        Parsed content of file_path, re-parsed with parser when stale.
        Raises FileNotFoundError when the artefact does not exist.
        """
        key = os.path.abspath(file_path)
        stamp = _stamp(key)
        if stamp is None:
            self._entries.pop(key, None)
            raise FileNotFoundError(file_path)

        if not self.is_stale(key):
            return self._entries[key][1]

        data = parser(key)
        if len(self._entries) >= self.max_entries and key not in self._entries:
            # drop the oldest insertion
            self._entries.pop(next(iter(self._entries)))
        self._entries[key] = (stamp, data)
        logger.debug(f"Parsed {file_path} into the artefact cache")
        return data

    def clear(self, file_path: str = None):
        """Forget one file or everything"""
        if file_path:
            self._entries.pop(os.path.abspath(file_path), None)
        else:
            self._entries.clear()

    def __len__(self) -> int:
        return len(self._entries)


# Shared by the results service
artefact_cache = ArtefactCache()

"""
One run per output directory: a `.lock` file created atomically for the duration of a run.
"""
import logging
import os
from typing import Optional

from utils.errors import RunLockedError

logger = logging.getLogger(__name__)

LOCK_NAME = ".lock"


class RunDirectoryLock:
    """Context manager that owns an output directory while a run writes into it"""

    def __init__(self, directory: str):
        self.directory = directory
        self.path = os.path.join(directory, LOCK_NAME)
        self._fd: Optional[int] = None

    def acquire(self) -> None:
        os.makedirs(self.directory, exist_ok=True)
        try:
            self._fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RunLockedError(f"output directory {self.directory!r} is in use by another run "
                                 f"(remove {self.path!r} if that run is gone)")
        os.write(self._fd, f"{os.getpid()}\n".encode("ascii"))
        logger.info(f"Locked output directory {self.directory}")

    def release(self) -> None:
        if self._fd is None:
            return
        os.close(self._fd)
        self._fd = None
        try:
            os.unlink(self.path)
        except FileNotFoundError:
            logger.warning(f"Lock file {self.path} vanished before release")

    @property
    def locked(self) -> bool:
        return self._fd is not None

    def __enter__(self) -> "RunDirectoryLock":
        self.acquire()
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.release()

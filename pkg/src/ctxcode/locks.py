"""Per-path write locks held by agents during an orchestration run."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

from .errors import LockConflict, LockNotHeld


@dataclass(frozen=True)
class LockEvent:
    action: str  # "acquire" | "release"
    path: str
    agent: str


class FileLockTable:
    """At most one holder per workspace-relative path.

    ``listener`` sees every acquire/release, which is how lock events reach the
    transcript.
    """

    def __init__(self, listener: Callable[[LockEvent], None] | None = None):
        self._holders: dict[str, str] = {}
        self.listener = listener

    def holder(self, path: str) -> str | None:
        return self._holders.get(path)

    def held(self) -> dict[str, str]:
        return dict(sorted(self._holders.items()))

    def acquire(self, path: str, agent: str) -> bool:
        """Take the lock; False when ``agent`` already holds it."""
        current = self._holders.get(path)
        if current == agent:
            return False
        if current is not None:
            raise LockConflict(path, current, agent)
        self._holders[path] = agent
        self._emit("acquire", path, agent)
        return True

    def release(self, path: str, agent: str) -> None:
        if self._holders.get(path) != agent:
            raise LockNotHeld(f"{agent} does not hold the lock on {path}")
        del self._holders[path]
        self._emit("release", path, agent)

    def release_all(self, agent: str) -> list[str]:
        mine = sorted(p for p, a in self._holders.items() if a == agent)
        for path in mine:
            self.release(path, agent)
        return mine

    def _emit(self, action: str, path: str, agent: str) -> None:
        if self.listener is not None:
            self.listener(LockEvent(action, path, agent))

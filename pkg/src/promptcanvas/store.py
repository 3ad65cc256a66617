"""File-backed persistence for workspaces plus an append-only interaction log.

Layout: ``<data_dir>/workspaces/<id>.json`` (one document per workspace)
and ``<data_dir>/log.jsonl`` (one entry per line). Saves are atomic via
write-then-rename. One lock per workspace id serializes mutations; the
log has its own lock for concurrent appends.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .errors import (
    EmptyName,
    NameConflict,
    StorageFailure,
    UnknownWorkspace,
)
from .model import Workspace, new_id, utc_now_iso

ACTOR_USER = "user"
ACTOR_SYSTEM = "system"

LOG_EVENTS = (
    "widget_created",
    "widget_moved",
    "option_added",
    "value_set",
    "flow_started",
    "flow_completed",
    "flow_failed",
    "revision_pushed",
    "reverted",
    "workspace_event",
)


@dataclass
class InteractionLogEntry:
    workspace_id: str
    actor: str
    event: str
    detail: dict = field(default_factory=dict)
    timestamp: str = field(default_factory=utc_now_iso)

    def __post_init__(self):
        if self.event not in LOG_EVENTS:
            raise ValueError(f"unknown log event {self.event!r}")
        if self.actor not in (ACTOR_USER, ACTOR_SYSTEM):
            raise ValueError(f"unknown actor {self.actor!r}")
        if not isinstance(self.detail, dict):
            raise ValueError("detail must be a mapping")

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "workspace_id": self.workspace_id,
            "actor": self.actor,
            "event": self.event,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InteractionLogEntry":
        return cls(
            workspace_id=data["workspace_id"],
            actor=data["actor"],
            event=data["event"],
            detail=data["detail"],
            timestamp=data["timestamp"],
        )


@dataclass
class WorkspaceSummary:
    id: str
    name: str
    widget_count: int
    created_at: str
    modified_at: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "widget_count": self.widget_count,
            "created_at": self.created_at,
            "modified_at": self.modified_at,
        }


class WorkspaceStore:
    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.workspaces_dir = self.data_dir / "workspaces"
        self.log_path = self.data_dir / "log.jsonl"
        self.workspaces_dir.mkdir(parents=True, exist_ok=True)
        self._log_lock = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    @classmethod
    def from_env(cls, env: Optional[dict] = None) -> "WorkspaceStore":
        env = env if env is not None else os.environ
        return cls(env.get("PC_DATA_DIR", "./pc-data"))

    def lock(self, workspace_id: str) -> threading.Lock:
        """Per-workspace mutation lock (single writer per workspace)."""
        with self._locks_guard:
            if workspace_id not in self._locks:
                self._locks[workspace_id] = threading.Lock()
            return self._locks[workspace_id]

    def _path(self, workspace_id: str) -> Path:
        return self.workspaces_dir / f"{workspace_id}.json"

    def _live_names(self, excluding: Optional[str] = None) -> set[str]:
        names = set()
        for path in self.workspaces_dir.glob("*.json"):
            if excluding and path.stem == excluding:
                continue
            try:
                names.add(json.loads(path.read_text("utf-8"))["name"])
            except (OSError, json.JSONDecodeError, KeyError) as exc:
                raise StorageFailure(f"corrupt workspace file {path}: {exc}") from exc
        return names

    def _check_name(self, name: str, excluding: Optional[str] = None):
        if not name.strip():
            raise EmptyName("workspace name is empty")
        if name in self._live_names(excluding=excluding):
            raise NameConflict(f"a workspace named {name!r} already exists")

    # -- lifecycle ------------------------------------------------------------

    def create_workspace(self, name: str) -> Workspace:
        self._check_name(name)
        workspace = Workspace(name=name)
        self.save_workspace(workspace)
        return workspace

    def duplicate_workspace(self, workspace_id: str, new_name: str) -> Workspace:
        original = self.load_workspace(workspace_id)
        self._check_name(new_name)
        now = utc_now_iso()
        copy = Workspace.from_dict(original.to_dict())
        copy = replace(
            copy,
            id=new_id(),
            name=new_name,
            widgets=[replace(w, id=new_id()) for w in copy.widgets],
            created_at=now,
            modified_at=now,
        )
        self.save_workspace(copy)
        return copy

    def rename_workspace(self, workspace_id: str, new_name: str) -> Workspace:
        workspace = self.load_workspace(workspace_id)
        self._check_name(new_name, excluding=workspace_id)
        workspace = replace(workspace, name=new_name)
        self.save_workspace(workspace)
        return workspace

    def delete_workspace(self, workspace_id: str):
        path = self._path(workspace_id)
        if not path.exists():
            raise UnknownWorkspace(f"no workspace with id {workspace_id}")
        self.append_log(
            InteractionLogEntry(
                workspace_id=workspace_id,
                actor=ACTOR_USER,
                event="workspace_event",
                detail={"action": "deleted"},
            )
        )
        try:
            path.unlink()
        except OSError as exc:
            raise StorageFailure(f"cannot delete workspace: {exc}") from exc

    def list_workspaces(self) -> list[WorkspaceSummary]:
        summaries = []
        for path in sorted(self.workspaces_dir.glob("*.json")):
            try:
                data = json.loads(path.read_text("utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise StorageFailure(f"corrupt workspace file {path}: {exc}") from exc
            summaries.append(
                WorkspaceSummary(
                    id=data["id"],
                    name=data["name"],
                    widget_count=len(data["widgets"]),
                    created_at=data["created_at"],
                    modified_at=data["modified_at"],
                )
            )
        summaries.sort(key=lambda s: s.modified_at, reverse=True)
        return summaries

    def load_workspace(self, workspace_id: str) -> Workspace:
        path = self._path(workspace_id)
        if not path.exists():
            raise UnknownWorkspace(f"no workspace with id {workspace_id}")
        try:
            return Workspace.from_dict(json.loads(path.read_text("utf-8")))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise StorageFailure(f"corrupt workspace file {path}: {exc}") from exc

    def save_workspace(self, workspace: Workspace):
        """Atomic save: write a temp file in the same directory, then rename."""
        workspace.modified_at = utc_now_iso()
        path = self._path(workspace.id)
        tmp = path.with_suffix(".json.tmp")
        try:
            tmp.write_text(
                json.dumps(workspace.to_dict(), ensure_ascii=False, indent=2), "utf-8"
            )
            os.replace(tmp, path)
        except OSError as exc:
            raise StorageFailure(f"cannot save workspace: {exc}") from exc

    # -- interaction log ------------------------------------------------------

    def append_log(self, entry: InteractionLogEntry):
        line = json.dumps(entry.to_dict(), ensure_ascii=False)
        try:
            with self._log_lock:
                with open(self.log_path, "a", encoding="utf-8") as f:
                    f.write(line + "\n")
                    f.flush()
                    os.fsync(f.fileno())
        except OSError as exc:
            raise StorageFailure(f"cannot append log entry: {exc}") from exc

    def read_log(self, workspace_id: Optional[str] = None) -> list[InteractionLogEntry]:
        if not self.log_path.exists():
            return []
        entries = []
        try:
            for line in self.log_path.read_text("utf-8").splitlines():
                if not line.strip():
                    continue
                entry = InteractionLogEntry.from_dict(json.loads(line))
                if workspace_id is None or entry.workspace_id == workspace_id:
                    entries.append(entry)
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise StorageFailure(f"corrupt log file: {exc}") from exc
        return entries

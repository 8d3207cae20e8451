"""File-backed session store: one directory per session, JSON artifacts.

Every artifact is recorded in the session's manifest together with a hash
of the inputs that produced it; loading an artifact against the current
input hash detects staleness after the session (or config) changed.
Mutations take an exclusive per-session file lock; reads are lock-free.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

from filelock import FileLock

from .errors import MissingArtifact, SessionExists, SessionNotFound, StaleArtifact
from .traces import Session, session_from_json, session_to_json

DATA_DIR_ENV = "STATESCOPE_DATA_DIR"


def sha256_hex(payload: str | bytes) -> str:
    data = payload.encode("utf-8") if isinstance(payload, str) else payload
    return hashlib.sha256(data).hexdigest()


class SessionStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def from_env(default: str | Path = "./statescope-data") -> "SessionStore":
        return SessionStore(os.environ.get(DATA_DIR_ENV, str(default)))

    # ------------------------------------------------------------- layout

    def _dir(self, session_id: str) -> Path:
        if not session_id or "/" in session_id or session_id.startswith("."):
            raise SessionNotFound(f"invalid session id {session_id!r}")
        return self.root / session_id

    def _session_file(self, session_id: str) -> Path:
        return self._dir(session_id) / "session.json"

    def _manifest_file(self, session_id: str) -> Path:
        return self._dir(session_id) / "manifest.json"

    def lock(self, session_id: str) -> FileLock:
        self._dir(session_id).mkdir(parents=True, exist_ok=True)
        return FileLock(self._dir(session_id) / ".lock")

    # ------------------------------------------------------------ sessions

    def exists(self, session_id: str) -> bool:
        return self._session_file(session_id).exists()

    def list_sessions(self) -> list[str]:
        return sorted(
            p.parent.name for p in self.root.glob("*/session.json")
        )

    def create(self, session: Session) -> None:
        if self.exists(session.session_id):
            raise SessionExists(f"session {session.session_id!r} already exists")
        self.save_session(session)

    def save_session(self, session: Session) -> None:
        d = self._dir(session.session_id)
        d.mkdir(parents=True, exist_ok=True)
        self._session_file(session.session_id).write_text(session_to_json(session))

    def load_session(self, session_id: str) -> Session:
        path = self._session_file(session_id)
        if not path.exists():
            raise SessionNotFound(f"no session {session_id!r}")
        return session_from_json(path.read_text())

    def session_bytes(self, session_id: str) -> bytes:
        path = self._session_file(session_id)
        if not path.exists():
            raise SessionNotFound(f"no session {session_id!r}")
        return path.read_bytes()

    # ----------------------------------------------------------- raw files

    def save_raw(self, session_id: str, name: str, payload: bytes) -> Path:
        d = self._dir(session_id) / "raw"
        d.mkdir(parents=True, exist_ok=True)
        path = d / name
        path.write_bytes(payload)
        return path

    def load_raw(self, session_id: str, name: str) -> bytes:
        path = self._dir(session_id) / "raw" / name
        if not path.exists():
            raise MissingArtifact(f"no raw file {name!r} for session {session_id!r}")
        return path.read_bytes()

    def has_raw(self, session_id: str, name: str) -> bool:
        return (self._dir(session_id) / "raw" / name).exists()

    def stage_event(self, session_id: str, kind: str, t_ms: int) -> list[dict]:
        events = self.staged_events(session_id)
        events.append({"kind": kind, "t_ms": int(t_ms)})
        events.sort(key=lambda e: e["t_ms"])
        self.save_raw(session_id, "events.json", json.dumps(events, sort_keys=True).encode())
        return events

    def staged_events(self, session_id: str) -> list[dict]:
        if not self.has_raw(session_id, "events.json"):
            return []
        return json.loads(self.load_raw(session_id, "events.json"))

    # ----------------------------------------------------------- artifacts

    def _load_manifest(self, session_id: str) -> dict:
        path = self._manifest_file(session_id)
        if not path.exists():
            return {}
        return json.loads(path.read_text())

    def _write_manifest(self, session_id: str, manifest: dict) -> None:
        self._manifest_file(session_id).write_text(
            json.dumps(manifest, sort_keys=True, indent=1) + "\n"
        )

    def save_artifact(self, session_id: str, name: str, content: str | bytes,
                      input_hash: str, meta: dict | None = None) -> dict:
        d = self._dir(session_id) / "artifacts"
        d.mkdir(parents=True, exist_ok=True)
        data = content.encode("utf-8") if isinstance(content, str) else content
        (d / name).write_bytes(data)
        manifest = self._load_manifest(session_id)
        entry = {"file": f"artifacts/{name}", "sha256": sha256_hex(data), "input_hash": input_hash}
        if meta:
            entry["meta"] = meta
        manifest[name] = entry
        self._write_manifest(session_id, manifest)
        return entry

    def artifact_entry(self, session_id: str, name: str) -> dict:
        manifest = self._load_manifest(session_id)
        if name not in manifest:
            raise MissingArtifact(f"artifact {name!r} not built for session {session_id!r}")
        return manifest[name]

    def load_artifact(self, session_id: str, name: str, expect_input_hash: str | None = None) -> bytes:
        entry = self.artifact_entry(session_id, name)
        if expect_input_hash is not None and entry["input_hash"] != expect_input_hash:
            raise StaleArtifact(
                f"artifact {name!r} was built from different inputs; rerun the pipeline"
            )
        path = self._dir(session_id) / entry["file"]
        if not path.exists():
            raise MissingArtifact(f"artifact file {entry['file']!r} missing on disk")
        return path.read_bytes()

    def manifest(self, session_id: str) -> dict:
        return self._load_manifest(session_id)

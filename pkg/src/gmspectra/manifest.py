"""Run manifests: parameters, input/output checksums, timestamps."""

from __future__ import annotations

import hashlib
import json
import os
from datetime import datetime, timezone

TOOL_VERSION = "0.1.0"


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class RunManifest:
    """Collects one command's parameters and artifact checksums."""

    def __init__(self, command: str, parameters: dict):
        self.data = {
            "tool": "gmspectra",
            "version": TOOL_VERSION,
            "command": command,
            "parameters": parameters,
            "inputs": {},
            "outputs": {},
            "flags": {},
            "started": _now(),
            "finished": None,
        }

    def add_input(self, path) -> None:
        self.data["inputs"][str(path)] = sha256_of(path)

    def add_output(self, path) -> None:
        self.data["outputs"][str(path)] = sha256_of(path)

    def set_flag(self, name: str, value) -> None:
        self.data["flags"][name] = value

    def write(self, path) -> None:
        self.data["finished"] = _now()
        tmp = f"{path}.tmp.{os.getpid()}"
        with open(tmp, "w") as fh:
            json.dump(self.data, fh, indent=1, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)

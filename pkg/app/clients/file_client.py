"""Reusable file reader."""
from __future__ import annotations
from dataclasses import dataclass
from pathlib import Path
from typing import Any
import json
from app.exceptions.custom_exceptions import ArtifactReadError

@dataclass
class FileClient:
    """Small wrapper around file reads for consistent encoding and errors."""
    encoding: str = "utf-8"

    def get_text(self, path: str | Path) -> str:
        """Read a file and return it as text."""
        try:
            return Path(path).read_text(encoding=self.encoding)
        except Exception as e:
            raise ArtifactReadError(f"Failed to read text from {path}: {e}") from e

    def get_json(self, path: str | Path) -> Any:
        """Read a file and parse it as JSON."""
        text = self.get_text(path)
        try:
            return json.loads(text)
        except Exception as e:
            raise ArtifactReadError(f"Failed to parse JSON from {path}: {e}") from e

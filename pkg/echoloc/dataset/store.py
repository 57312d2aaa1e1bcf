"""
Spectrogram store for a dataset output tree.

Files live at ``<root>/spec/<index>.bin`` with a YAML sidecar
``<index>.yaml``. Writes are atomic (temp file then rename) and every file
is identified by the SHA-256 of its bytes, which is what makes rendering
resumable: an entry is reused only when its file still hashes to the
checksum recorded in the manifest.

All paths are validated to stay under the root directory.
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

import yaml

from echoloc.audio.spectrogram import Spectrogram, read_spectrogram, spectrogram_bytes
from echoloc.errors import DatasetError, ErrorCode

SPEC_DIR = "spec"


class SpectrogramStore:
    """
    Read and write dataset spectrograms by placement index.

    Parameters
    ----------
    root:
        Dataset output directory. Created if it does not exist.
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root).expanduser().resolve()
        self.root.mkdir(parents=True, exist_ok=True)

    # ------------------------------------------------------------------
    # Internal helpers
    # ------------------------------------------------------------------

    def _validate_under_root(self, path: Path) -> None:
        resolved = path.resolve()
        if not str(resolved).startswith(str(self.root) + os.sep) and resolved != self.root:
            raise DatasetError(f"path {path} resolves outside dataset root {self.root}", ErrorCode.VALIDATION_ERROR)

    @staticmethod
    def _write_atomic(path: Path, data: bytes) -> None:
        tmp = path.with_name(path.name + ".tmp")
        try:
            tmp.write_bytes(data)
            tmp.replace(path)
        except BaseException:
            if tmp.exists():
                tmp.unlink()
            raise

    # ------------------------------------------------------------------
    # Public API
    # ------------------------------------------------------------------

    def relative_path(self, index: int) -> str:
        return f"{SPEC_DIR}/{index}.bin"

    def path_for(self, index: int) -> Path:
        if index < 0:
            raise DatasetError(f"invalid placement index {index}", ErrorCode.VALIDATION_ERROR)
        path = self.root / SPEC_DIR / f"{index}.bin"
        self._validate_under_root(path)
        return path

    def write(self, index: int, spec: Spectrogram) -> str:
        """Store ``spec`` for placement ``index`` and return its checksum."""
        path = self.path_for(index)
        path.parent.mkdir(parents=True, exist_ok=True)
        data = spectrogram_bytes(spec)
        sidecar = yaml.safe_dump(spec.sidecar(), sort_keys=True).encode("utf-8")
        self._write_atomic(path.with_suffix(".yaml"), sidecar)
        self._write_atomic(path, data)
        return hashlib.sha256(data).hexdigest()

    def checksum(self, index: int) -> str | None:
        path = self.path_for(index)
        if not path.is_file():
            return None
        return hashlib.sha256(path.read_bytes()).hexdigest()

    def verify(self, index: int, checksum: str) -> bool:
        """True if the stored file exists and hashes to ``checksum``."""
        return self.checksum(index) == checksum

    def read(self, index: int) -> Spectrogram:
        path = self.path_for(index)
        if not path.is_file():
            raise DatasetError(f"spectrogram missing: {path}", ErrorCode.MISSING_FILE, placement_index=index)
        return read_spectrogram(path)

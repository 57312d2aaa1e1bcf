"""Dataset manifest (``echoloc-manifest/1``) and stratified fold assignment."""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import jsonschema

from echoloc.dataset.placement import SourcePlacement
from echoloc.errors import DatasetError, ErrorCode
from echoloc.scene.types import Point3
from echoloc.seeding import rng_for

logger = logging.getLogger(__name__)

MANIFEST_FORMAT = "echoloc-manifest/1"
MANIFEST_NAME = "manifest.json"
PARTIAL_NAME = "manifest.partial.json"
TEST_DIR = "test"

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}

MANIFEST_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["format", "mode", "scene_checksum", "dry_checksum", "config", "classes", "entries"],
    "properties": {
        "format": {"const": MANIFEST_FORMAT},
        "mode": {"enum": ["regions", "coords"]},
        "scene_checksum": {"type": "string"},
        "dry_checksum": {"type": "string"},
        "config": {"type": "object"},
        "classes": {"type": "array", "items": {"type": "string"}},
        "folds": {"type": ["integer", "null"]},
        "entries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["index", "position", "split", "path", "checksum"],
                "properties": {
                    "index": {"type": "integer", "minimum": 0},
                    "position": _VEC3,
                    "region": {"type": ["string", "null"]},
                    "split": {"enum": ["train", "test"]},
                    "path": {"type": "string"},
                    "checksum": {"type": "string"},
                    "fold": {"type": ["integer", "null"]},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class ManifestEntry:
    index: int
    placement: SourcePlacement
    path: str
    checksum: str
    fold: int | None = None

    @property
    def label(self) -> str:
        return self.placement.region or ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "position": list(self.placement.position),
            "region": self.placement.region,
            "split": self.placement.split,
            "path": self.path,
            "checksum": self.checksum,
            "fold": self.fold,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ManifestEntry:
        return cls(
            index=int(d["index"]),
            placement=SourcePlacement(Point3.of(d["position"]), d.get("region"), d["split"]),
            path=d["path"],
            checksum=d["checksum"],
            fold=d.get("fold"),
        )


@dataclass
class DatasetManifest:
    """
    Rendered dataset description.

    Paths are relative to ``root`` (the directory holding the manifest),
    so a dataset directory can be moved as a whole.
    """

    mode: str
    scene_checksum: str
    dry_checksum: str
    config: dict[str, Any]
    classes: list[str]
    entries: list[ManifestEntry] = field(default_factory=list)
    folds: int | None = None
    root: Path | None = None

    @property
    def train_entries(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.placement.split == "train"]

    @property
    def test_entries(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.placement.split == "test"]

    def fold_entries(self, fold: int) -> list[ManifestEntry]:
        return [e for e in self.train_entries if e.fold == fold]

    def fold_sizes(self) -> list[int]:
        if self.folds is None:
            return []
        return [len(self.fold_entries(f)) for f in range(self.folds)]

    def resolve(self, entry: ManifestEntry) -> Path:
        base = self.root if self.root is not None else Path(".")
        return base / entry.path

    def class_index(self, label: str) -> int:
        try:
            return self.classes.index(label)
        except ValueError:
            raise DatasetError(f"label {label!r} is not one of the manifest classes") from None

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": MANIFEST_FORMAT,
            "mode": self.mode,
            "scene_checksum": self.scene_checksum,
            "dry_checksum": self.dry_checksum,
            "config": self.config,
            "classes": list(self.classes),
            "folds": self.folds,
            "entries": [e.to_dict() for e in sorted(self.entries, key=lambda e: e.index)],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any], root: Path | None = None) -> DatasetManifest:
        try:
            jsonschema.validate(instance=d, schema=MANIFEST_SCHEMA)
        except jsonschema.ValidationError as e:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            raise DatasetError(f"invalid manifest at {where}: {e.message}", ErrorCode.PARSE_ERROR) from e
        return cls(
            mode=d["mode"],
            scene_checksum=d["scene_checksum"],
            dry_checksum=d["dry_checksum"],
            config=d["config"],
            classes=list(d["classes"]),
            entries=[ManifestEntry.from_dict(e) for e in d["entries"]],
            folds=d.get("folds"),
            root=root,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def save(self, path: str | Path | None = None) -> Path:
        """Write atomically to ``path`` (default ``<root>/manifest.json``)."""
        if path is None:
            if self.root is None:
                raise DatasetError("manifest has no root directory; pass a path")
            path = self.root / MANIFEST_NAME
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        tmp = p.with_name(p.name + ".tmp")
        tmp.write_text(self.dumps(), encoding="utf-8")
        tmp.replace(p)
        return p


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load a manifest file (or ``<dir>/manifest.json``)."""
    p = Path(path)
    if p.is_dir():
        p = p / MANIFEST_NAME
    if not p.is_file():
        raise DatasetError(f"manifest not found: {p}", ErrorCode.MISSING_FILE)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DatasetError(f"{p}: {e}", ErrorCode.PARSE_ERROR) from e
    return DatasetManifest.from_dict(doc, root=p.parent)


def held_out_manifest(manifest: DatasetManifest) -> DatasetManifest | None:
    """The held-out test dataset stored under ``<root>/test``, if any."""
    if manifest.root is None or not (manifest.root / TEST_DIR / MANIFEST_NAME).is_file():
        return None
    held_out = load_manifest(manifest.root / TEST_DIR)
    if held_out.classes != manifest.classes:
        raise DatasetError(
            f"held-out classes {held_out.classes} differ from {manifest.classes}", ErrorCode.VALIDATION_ERROR
        )
    return held_out


def assign_folds(manifest: DatasetManifest, k: int, seed: int) -> DatasetManifest:
    """
    Stratified k-fold assignment of the train entries.

    Within each class (in ``manifest.classes`` order) entries are shuffled
    with a stream keyed by ``(seed, "folds", label)`` and dealt round-robin
    with one counter shared across classes. Fold sizes and per-fold class
    counts therefore differ by at most one. Test entries get no fold.

    Raises
    ------
    DatasetError
        ``k < 2``, fewer train entries than ``k``, or a class with fewer
        than ``k`` entries.
    """
    if k < 2:
        raise DatasetError(f"k must be >= 2, got {k}", ErrorCode.VALIDATION_ERROR)
    train = manifest.train_entries
    if len(train) < k:
        raise DatasetError(f"{len(train)} train samples cannot fill {k} folds", ErrorCode.VALIDATION_ERROR)

    by_class: dict[str, list[ManifestEntry]] = defaultdict(list)
    for e in sorted(train, key=lambda e: e.index):
        by_class[e.label].append(e)
    order = [c for c in manifest.classes if c in by_class] + sorted(c for c in by_class if c not in manifest.classes)

    folds: dict[int, int] = {}
    counter = 0
    for label in order:
        members = by_class[label]
        if len(members) < k:
            raise DatasetError(
                f"class {label!r} has {len(members)} samples, fewer than k={k}", ErrorCode.VALIDATION_ERROR
            )
        for j in rng_for(seed, "folds", label).permutation(len(members)):
            folds[members[int(j)].index] = counter % k
            counter += 1

    entries = [replace(e, fold=folds.get(e.index)) if e.placement.split == "train" else replace(e, fold=None)
               for e in manifest.entries]
    logger.debug("Assigned %d train samples to %d folds", len(train), k)
    return replace(manifest, entries=entries, folds=k)

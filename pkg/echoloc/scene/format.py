"""Scene file format ``echoloc-scene/1``: JSON schema, loader and writer."""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Any

import jsonschema

from echoloc.errors import ErrorCode, SceneParseError
from echoloc.scene.types import Material, Point3, Region, Scene, Surface, make_scene

logger = logging.getLogger(__name__)

SCENE_FORMAT = "echoloc-scene/1"

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}

SCENE_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["format", "vertices", "materials", "surfaces", "receiver"],
    "properties": {
        "format": {"const": SCENE_FORMAT},
        "vertices": {"type": "array", "items": _VEC3},
        "materials": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["absorption"],
                "properties": {
                    "name": {"type": "string"},
                    "absorption": {"type": "number"},
                    "scattering": {"type": "number"},
                },
            },
        },
        "surfaces": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["material", "triangles"],
                "properties": {
                    "name": {"type": "string"},
                    "material": {"type": "integer"},
                    "triangles": {
                        "type": "array",
                        "items": {
                            "type": "array",
                            "items": {"type": "integer"},
                            "minItems": 3,
                            "maxItems": 3,
                        },
                    },
                },
            },
        },
        "regions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "min", "max"],
                "properties": {"name": {"type": "string"}, "min": _VEC3, "max": _VEC3},
            },
        },
        "receiver": {
            "type": "object",
            "required": ["position"],
            "properties": {"position": _VEC3, "facing": _VEC3},
        },
        "bounds": {
            "type": "object",
            "required": ["min", "max"],
            "properties": {"min": _VEC3, "max": _VEC3},
        },
    },
}


def scene_from_dict(doc: dict[str, Any]) -> Scene:
    """Build a validated scene from a parsed ``echoloc-scene/1`` document.

    Raises
    ------
    SceneParseError
        If the document does not match the schema.
    SceneValidationError
        If the document is well-formed but violates a scene invariant.
    """
    try:
        jsonschema.validate(instance=doc, schema=SCENE_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise SceneParseError(f"{where}: {e.message}") from e

    materials = [
        Material(
            absorption=float(m["absorption"]),
            scattering=float(m.get("scattering", 0.0)),
            name=m.get("name", ""),
        )
        for m in doc["materials"]
    ]
    surfaces = [
        Surface(
            triangles=tuple(tuple(int(i) for i in t) for t in s["triangles"]),
            material_id=int(s["material"]),
            name=s.get("name", ""),
        )
        for s in doc["surfaces"]
    ]
    regions = [
        Region(name=r["name"], min=Point3.of(r["min"]), max=Point3.of(r["max"]))
        for r in doc.get("regions", [])
    ]
    receiver = doc["receiver"]
    bounds = doc.get("bounds")
    return make_scene(
        vertices=doc["vertices"] or [],
        surfaces=surfaces,
        materials=materials,
        regions=regions,
        receiver=receiver["position"],
        facing=receiver.get("facing", (0.0, 0.0, 1.0)),
        bounds=(bounds["min"], bounds["max"]) if bounds else None,
    )


def scene_to_dict(scene: Scene) -> dict[str, Any]:
    return {
        "format": SCENE_FORMAT,
        "vertices": [[float(c) for c in v] for v in scene.vertices],
        "materials": [
            {"name": m.name, "absorption": m.absorption, "scattering": m.scattering}
            for m in scene.materials
        ],
        "surfaces": [
            {"name": s.name, "material": s.material_id, "triangles": [list(t) for t in s.triangles]}
            for s in scene.surfaces
        ],
        "regions": [
            {"name": r.name, "min": list(r.min), "max": list(r.max)} for r in scene.regions
        ],
        "receiver": {"position": list(scene.receiver), "facing": list(scene.facing)},
        "bounds": {"min": list(scene.bounds[0]), "max": list(scene.bounds[1])},
    }


def dumps_scene(scene: Scene) -> str:
    """Canonical serialization (sorted keys), stable across runs."""
    return json.dumps(scene_to_dict(scene), sort_keys=True, indent=1)


def scene_checksum(scene: Scene) -> str:
    """SHA-256 of the canonical serialization."""
    return hashlib.sha256(dumps_scene(scene).encode("utf-8")).hexdigest()


def load_scene(path: str | Path) -> Scene:
    """
    Load and validate a scene file.

    Raises
    ------
    SceneParseError
        Missing file, malformed JSON, or schema mismatch.
    SceneValidationError
        Invariant violation (degenerate triangle, unknown material id,
        receiver outside bounds, ...).
    """
    p = Path(path)
    if not p.is_file():
        raise SceneParseError(f"scene file not found: {p}", ErrorCode.MISSING_FILE)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise SceneParseError(f"{p}: {e}") from e
    scene = scene_from_dict(doc)
    logger.debug("Loaded scene %s (%d triangles, %d regions)", p, scene.num_triangles, len(scene.regions))
    return scene


def save_scene(scene: Scene, path: str | Path) -> str:
    """Write ``scene`` to ``path`` and return the content checksum."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    text = dumps_scene(scene)
    tmp = p.with_suffix(p.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(p)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()

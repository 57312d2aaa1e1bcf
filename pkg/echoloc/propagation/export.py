"""RIR export: 32-bit float WAV plus a YAML sidecar."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import soundfile as sf
import yaml

from echoloc.config import PropagationConfig
from echoloc.errors import EcholocError
from echoloc.propagation.decay import reverberation_time
from echoloc.propagation.types import ImpulseResponse

logger = logging.getLogger(__name__)

RIR_FORMAT = "echoloc-rir/1"


def sidecar_path(wav_path: str | Path) -> Path:
    p = Path(wav_path)
    return p.with_suffix(".yaml")


def export_rir(
    path: str | Path,
    ir: ImpulseResponse,
    config: PropagationConfig,
    *,
    scene_checksum: str | None = None,
    receiver: Sequence[float] | None = None,
) -> Path:
    """
    Write ``ir`` as a mono float32 WAV and a sidecar next to it.

    The sidecar echoes the propagation config, the scene checksum and
    receiver position, the estimated RT60 (``null`` when the decay is too
    short to fit) and the SHA-256 of the WAV file. No timestamps are
    written, so identical inputs give identical files.
    """
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    tmp = p.with_name(p.name + ".tmp")
    sf.write(str(tmp), np.asarray(ir.samples, dtype=np.float32), ir.sample_rate, subtype="FLOAT", format="WAV")
    tmp.replace(p)

    try:
        rt60: float | None = round(reverberation_time(ir), 6)
    except EcholocError:
        rt60 = None

    sidecar: dict[str, Any] = {
        "format": RIR_FORMAT,
        "sample_rate": ir.sample_rate,
        "num_samples": len(ir),
        "propagation": asdict(config),
        "scene_checksum": scene_checksum,
        "rt60": rt60,
        "wav_sha256": hashlib.sha256(p.read_bytes()).hexdigest(),
        **{k: v for k, v in ir.metadata.items()},
    }
    if receiver is not None:
        sidecar["receiver"] = [float(c) for c in receiver]
    side = sidecar_path(p)
    side.write_text(yaml.safe_dump(sidecar, sort_keys=True), encoding="utf-8")
    logger.info("Wrote RIR %s (%d samples)", p, len(ir))
    return p

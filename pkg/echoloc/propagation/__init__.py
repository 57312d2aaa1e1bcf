"""Room impulse response simulation."""

from echoloc.propagation.decay import reverberation_time, schroeder_curve
from echoloc.propagation.export import export_rir
from echoloc.propagation.image_source import image_source_rir, image_sources
from echoloc.propagation.tracer import connect, simulate_rir, trace_subpaths
from echoloc.propagation.types import Contributions, ImpulseResponse, Subpath, SubpathBatch

__all__ = [
    "Contributions",
    "ImpulseResponse",
    "Subpath",
    "SubpathBatch",
    "connect",
    "export_rir",
    "image_source_rir",
    "image_sources",
    "reverberation_time",
    "schroeder_curve",
    "simulate_rir",
    "trace_subpaths",
]

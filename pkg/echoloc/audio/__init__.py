"""Audio processing: WAV I/O, normalization, convolution and spectrograms."""

from echoloc.audio.clip import AudioClip
from echoloc.audio.convolve import convolve
from echoloc.audio.dry import load_dry, synth_dry
from echoloc.audio.loudness import BELOW_GATE, Loudness, loudness_normalize, measure_lufs, peak_normalize
from echoloc.audio.spectrogram import Spectrogram, read_spectrogram, stft, write_spectrogram
from echoloc.audio.wavio import read_wav, write_wav

__all__ = [
    "BELOW_GATE",
    "AudioClip",
    "Loudness",
    "Spectrogram",
    "convolve",
    "load_dry",
    "loudness_normalize",
    "measure_lufs",
    "peak_normalize",
    "read_spectrogram",
    "read_wav",
    "stft",
    "synth_dry",
    "write_spectrogram",
    "write_wav",
]

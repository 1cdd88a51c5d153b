"""Spectral preprocessing (FFT/STFT/log-magnitude) and complementary FIR pairs.

The FFT is a radix-2 decimation-in-time transform (see ``kernels``); the
highpass of a designed pair is the delta-minus-lowpass complement so the two
filters sum to a pure delay by construction.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .graph import Block
from .series import TimeSeries


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def fft(x) -> np.ndarray:
    """Forward DFT of a vector whose length is a power of two."""
    a = np.asarray(x)
    if a.ndim != 1 or not _is_pow2(a.shape[0]):
        raise ValueError(f"fft needs a 1-D power-of-two length, got shape {a.shape}")
    a = a.astype(np.complex128, copy=True)
    kernels.fft_inplace(a)
    return a


def ifft(X) -> np.ndarray:
    """Inverse DFT via the conjugate method: conj(fft(conj(X))) / n."""
    X = np.asarray(X, dtype=np.complex128)
    return np.conj(fft(np.conj(X))) / X.shape[0]


def hann_window(n: int) -> np.ndarray:
    """Symmetric Hann window, endpoints zero."""
    if n == 1:
        return np.ones(1)
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(2.0 * math.pi * k / (n - 1)))


@dataclass(frozen=True)
class Spectrogram:
    """Magnitude time-frequency grid: values[frame, bin] >= 0."""

    values: np.ndarray
    hop: int
    window_len: int
    sample_rate: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 2 or v.shape[1] != self.window_len // 2 + 1:
            raise ValueError(
                f"values must be (frames, window_len/2+1), got {v.shape} "
                f"for window_len {self.window_len}"
            )
        if np.any(v < 0):
            raise ValueError("spectrogram magnitudes must be nonnegative")

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def bins(self) -> int:
        return self.values.shape[1]

    def frame_start_times(self) -> np.ndarray:
        return np.arange(self.frames) * self.hop / self.sample_rate


def stft(signal, window_len: int, hop: int, sample_rate: float = 1.0) -> Spectrogram:
    """Hann-windowed magnitude STFT with frames = 1 + (len - window)//hop."""
    x = np.asarray(signal, dtype=float).ravel()
    if not _is_pow2(window_len):
        raise ValueError(f"window_len must be a power of two, got {window_len}")
    if not 0 < hop <= window_len:
        raise ValueError(f"hop must be in (0, window_len], got {hop}")
    if x.shape[0] < window_len:
        raise ValueError(
            f"signal length {x.shape[0]} shorter than one window ({window_len})"
        )
    n_frames = 1 + (x.shape[0] - window_len) // hop
    win = hann_window(window_len)
    bins = window_len // 2 + 1
    values = np.empty((n_frames, bins))
    for f in range(n_frames):
        seg = x[f * hop : f * hop + window_len] * win
        values[f] = np.abs(fft(seg)[:bins])
    return Spectrogram(values, hop=hop, window_len=window_len, sample_rate=sample_rate)


def log_magnitude(s: Spectrogram, floor_db: float = -80.0) -> np.ndarray:
    """Magnitudes in dB relative to the global peak, floored at floor_db."""
    if floor_db >= 0:
        raise ValueError(f"floor_db must be negative, got {floor_db}")
    v = s.values
    vmax = float(v.max())
    if vmax == 0.0:
        return np.full_like(v, floor_db)
    eps = 10.0 ** (floor_db / 20.0) * vmax
    out = 20.0 * np.log10(np.maximum(v, eps) / vmax)
    return np.maximum(out, floor_db)


def spectrogram_csv(s: Spectrogram, matrix=None) -> str:
    """CSV rows per frame: frame_start_s first, then per-bin values."""
    m = s.values if matrix is None else np.asarray(matrix)
    header = "frame_start_s," + ",".join(f"bin{k}" for k in range(m.shape[1]))
    rows = [header]
    for t, row in zip(s.frame_start_times(), m):
        rows.append(",".join(format(v, ".17g") for v in (t, *row)))
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------------
# FIR design and application
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FIRFilter:
    """Linear-phase FIR taps; odd length gives an integer group delay."""

    taps: np.ndarray
    kind: str
    cutoff: float

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float)
        object.__setattr__(self, "taps", taps)
        if taps.shape[0] % 2 != 1:
            raise ValueError("tap count must be odd")
        if self.kind not in ("lowpass", "highpass"):
            raise ValueError(f"kind must be lowpass or highpass, got {self.kind!r}")

    @property
    def delay(self) -> int:
        return (len(self.taps) - 1) // 2


def design_lowpass(cutoff: float, numtaps: int) -> FIRFilter:
    """Hann-windowed sinc lowpass, DC gain normalized to exactly 1.

    ``cutoff`` is in cycles per sample, 0 < cutoff < 0.5 (Nyquist).
    """
    if not 0.0 < cutoff < 0.5:
        raise ValueError(f"cutoff must lie in (0, 0.5), got {cutoff}")
    if numtaps % 2 != 1 or numtaps < 3:
        raise ValueError(f"numtaps must be odd and >= 3, got {numtaps}")
    m = (numtaps - 1) // 2
    k = np.arange(numtaps) - m
    taps = 2.0 * cutoff * np.sinc(2.0 * cutoff * k) * hann_window(numtaps)
    taps = taps / taps.sum()
    return FIRFilter(taps, "lowpass", cutoff)


def design_highpass_complement(low: FIRFilter) -> FIRFilter:
    """Spectral complement: delta at the center minus the lowpass taps."""
    taps = -low.taps.copy()
    taps[low.delay] += 1.0
    return FIRFilter(taps, "highpass", low.cutoff)


def frequency_response(f: FIRFilter, freqs) -> np.ndarray:
    """Complex DTFT of the taps at normalized frequencies (cycles/sample)."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    n = np.arange(len(f.taps))
    return np.exp(-2j * math.pi * freqs[:, None] * n[None, :]) @ f.taps


def apply_fir(f: FIRFilter, series: TimeSeries) -> TimeSeries:
    """Filter a uniformly sampled series, compensating the group delay.

    Edges are reflection-padded so the output keeps the input's length and
    alignment; a designed low/high pair therefore sums back to the input.
    """
    if not series.is_uniform():
        raise ValueError("apply_fir requires uniform sampling (dt constant to 1e-9 rel)")
    if len(series) < 2:
        raise ValueError("series too short to filter")
    m = f.delay
    out = np.empty_like(series.values)
    for c in range(series.dim):
        x = np.pad(series.values[:, c], m, mode="reflect")
        out[:, c] = kernels.convolve_valid(x, f.taps)
    return TimeSeries(series.times, out)


def stft_log_magnitude_block(
    window_len: int, hop: int, n_samples: int, floor_db: float = -80.0,
    name: str = "stft_logmag",
) -> Block:
    """Block mapping a raw sample vector to the flattened dB spectrogram."""
    n_frames = 1 + (n_samples - window_len) // hop
    bins = window_len // 2 + 1
    return Block(
        name,
        (n_samples,),
        n_frames * bins,
        lambda x: log_magnitude(stft(x, window_len, hop), floor_db).ravel(),
    )

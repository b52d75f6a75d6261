"""Deterministic signal primitives for the ultrasonic pipeline.

Chirp synthesis, tapered-cosine windowing, windowed-sinc band-pass FIR
design, one-sided FFT magnitude spectra, and range/sample conversions.
All functions are pure; waveforms are immutable once constructed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_SAMPLE_RATE = 450_000.0  # Hz, the sensor's output stream rate
SPEED_OF_SOUND = 343.0           # m/s in air at roughly 20 degrees C


class InvalidSpecError(ValueError):
    """A signal spec violates its invariants (Nyquist, duration, taps...)."""


@dataclass(frozen=True, eq=False)
class Waveform:
    """Uniformly sampled real-valued pressure signal."""

    samples: np.ndarray
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size < 1:
            raise InvalidSpecError("waveform must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise InvalidSpecError("waveform samples must be finite")
        if not self.sample_rate > 0:
            raise InvalidSpecError("sample_rate must be positive")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class ChirpSpec:
    """Linear frequency sweep: f_start to f_end over duration seconds."""

    f_start: float
    f_end: float
    duration: float
    amplitude: float = 1.0


# The two emitted-call designs used throughout: a fast broadband sweep and a
# longer sweep that carries more energy per call.
STANDARD_CALLS = {
    "fast": ChirpSpec(f_start=180_000.0, f_end=30_000.0, duration=0.001),
    "long": ChirpSpec(f_start=160_000.0, f_end=10_000.0, duration=0.006),
}


@dataclass(frozen=True)
class FilterSpec:
    """Band-pass FIR design parameters. num_taps must be odd so the filter
    has an integer group delay."""

    low_cut: float = 30_000.0
    high_cut: float = 100_000.0
    num_taps: int = 257


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One-sided DFT magnitude: length n_fft // 2 + 1, all values >= 0."""

    magnitudes: np.ndarray
    bin_width: float
    n_fft: int

    def __post_init__(self):
        mags = np.asarray(self.magnitudes, dtype=np.float64)
        if mags.size != self.n_fft // 2 + 1:
            raise ValueError("one-sided spectrum length must be n_fft // 2 + 1")
        if np.any(mags < 0):
            raise ValueError("spectrum magnitudes must be nonnegative")
        mags.flags.writeable = False
        object.__setattr__(self, "magnitudes", mags)

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.magnitudes.size) * self.bin_width


def generate_chirp(spec: ChirpSpec, sample_rate: float = DEFAULT_SAMPLE_RATE) -> Waveform:
    """Synthesize a linear sweep.

    The phase is the integral of the instantaneous-frequency law
    f(t) = f_start + (f_end - f_start) * t / duration, so the output length
    is round(duration * sample_rate) samples at constant amplitude.
    """
    if spec.duration <= 0:
        raise InvalidSpecError("chirp duration must be positive")
    nyquist = sample_rate / 2
    for f in (spec.f_start, spec.f_end):
        if not 0 < f < nyquist:
            raise InvalidSpecError(
                f"chirp frequency {f} Hz outside (0, {nyquist}) Hz"
            )
    n = int(round(spec.duration * sample_rate))
    t = np.arange(n) / sample_rate
    sweep_rate = (spec.f_end - spec.f_start) / spec.duration
    phase = 2.0 * np.pi * (spec.f_start * t + 0.5 * sweep_rate * t * t)
    return Waveform(spec.amplitude * np.sin(phase), sample_rate)


def tukey_window(length: int, taper_fraction: float) -> np.ndarray:
    """Tapered-cosine window over [0, length - 1].

    taper_fraction 0 is rectangular, 1 is a Hann window. The tapered ends
    reach exactly 0; the interior plateau is exactly 1.
    """
    if not 0.0 <= taper_fraction <= 1.0:
        raise InvalidSpecError("taper_fraction must lie in [0, 1]")
    if length == 1 or taper_fraction == 0.0:
        return np.ones(length)
    x = np.arange(length) / (length - 1)
    w = np.ones(length)
    ramp = x < taper_fraction / 2
    w[ramp] = 0.5 * (1 + np.cos(np.pi * (2 * x[ramp] / taper_fraction - 1)))
    ramp = x > 1 - taper_fraction / 2
    w[ramp] = 0.5 * (
        1 + np.cos(np.pi * (2 * x[ramp] / taper_fraction - 2 / taper_fraction + 1))
    )
    return w


def apply_window(w: Waveform, taper_fraction: float) -> Waveform:
    """Damp the start and end of a fragment with a tapered-cosine window."""
    return Waveform(w.samples * tukey_window(len(w), taper_fraction), w.sample_rate)


def design_bandpass(spec: FilterSpec, sample_rate: float = DEFAULT_SAMPLE_RATE) -> np.ndarray:
    """Linear-phase band-pass FIR via windowed sinc (Hamming window).

    Built as the difference of two low-pass prototypes. The right half is a
    mirror of the left half, so h[k] == h[num_taps - 1 - k] holds exactly.
    Passband gain is ~1, DC gain ~0, and the -6 dB points sit at the cut
    frequencies.
    """
    nyquist = sample_rate / 2
    if not 0 < spec.low_cut < spec.high_cut < nyquist:
        raise InvalidSpecError(
            f"need 0 < low_cut < high_cut < {nyquist} Hz, "
            f"got ({spec.low_cut}, {spec.high_cut})"
        )
    if spec.num_taps < 3 or spec.num_taps % 2 == 0:
        raise InvalidSpecError("num_taps must be odd and >= 3")
    half = (spec.num_taps - 1) // 2
    # offsets m..0 relative to the center tap; evaluated on nonnegative
    # arguments only, then mirrored, to guarantee exact symmetry
    offsets = np.arange(half, -1, -1)
    lo, hi = spec.low_cut / sample_rate, spec.high_cut / sample_rate
    ideal = 2 * hi * np.sinc(2 * hi * offsets) - 2 * lo * np.sinc(2 * lo * offsets)
    win = 0.54 - 0.46 * np.cos(2 * np.pi * np.arange(half + 1) / (spec.num_taps - 1))
    left = ideal * win
    return np.concatenate([left, left[-2::-1]])


def filter_waveform(w: Waveform, coeffs: np.ndarray) -> Waveform:
    """Convolve with an FIR kernel, compensating the group delay so the
    output stays time-aligned with the input. Output length equals input
    length (edges are implicitly zero-padded)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.ndim != 1 or coeffs.size == 0:
        raise InvalidSpecError("coefficients must be a non-empty 1-D sequence")
    if coeffs.size > len(w):
        raise InvalidSpecError("kernel longer than waveform")
    delay = (coeffs.size - 1) // 2
    full = np.convolve(w.samples, coeffs, mode="full")
    return Waveform(full[delay:delay + len(w)], w.sample_rate)


def fft_magnitude(w: Waveform) -> Spectrum:
    """One-sided magnitude of the DFT of the whole waveform."""
    n = len(w)
    if n < 2:
        raise InvalidSpecError("need at least 2 samples for a spectrum")
    mags = np.abs(np.fft.rfft(w.samples))
    return Spectrum(mags, w.sample_rate / n, n)


def range_to_sample(
    range_m: float,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    speed_of_sound: float = SPEED_OF_SOUND,
) -> int:
    """Sample index of the two-way travel time to a target at range_m."""
    if range_m <= 0:
        raise InvalidSpecError("range must be positive")
    return int(round(2.0 * range_m / speed_of_sound * sample_rate))

"""Geometric-acoustics model of dish-shaped spherical-cap reflectors.

A dish landmark is a concave spherical cap (aperture radius a, depth h)
facing the transducer. Its echo carries a characteristic peak train:

* an edge peak from the rim, arriving 2h/c before the central peak,
* a prominent central peak from the concave surface at the two-way range
  delay,
* secondary peaks from double-bounce rays inside the cap, trailing the
  central peak by multiples of a geometry-determined excess delay.

The secondary excess delay and the off-axis angle beyond which secondary
paths vanish are both found by tracing specular rays in the 2-D section
of the cap (apex at the origin, axis toward the transducer, sphere center
at (0, R)). Rays arrive as a plane wave, bounce twice off the inner
sphere, and count as returning when they leave antiparallel to the
arrival direction.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .signals import SPEED_OF_SOUND, Waveform, range_to_sample

DEFAULT_DEPTH_RATIO = 0.30
DEFAULT_TAPER = 0.2       # tapered rims suppress most of the edge reflection
SECONDARY_DECAY = 0.6     # amplitude ratio between consecutive secondary peaks
NUM_SECONDARY = 2         # double-bounce repeats kept in the tap train

# analysis band shared with the feature pipeline, used for noise scaling
LANDMARK_BAND = (30_000.0, 100_000.0)

_ON_CAP_TOL = 1e-12


class InvalidSceneError(ValueError):
    """Scene is unusable for the requested operation (e.g. no landmark)."""


class NoSecondaryPathError(RuntimeError):
    """The cap is too shallow for any returning double-bounce ray."""


@dataclass(frozen=True)
class DishLandmark:
    """Spherical-cap reflector: rim opening radius, depth as a fraction of
    the diameter, and an edge-amplitude factor in [0, 1]."""

    aperture_radius: float
    depth_ratio: float = DEFAULT_DEPTH_RATIO
    taper: float = DEFAULT_TAPER

    def __post_init__(self):
        if not self.aperture_radius > 0:
            raise ValueError("aperture_radius must be positive")
        if not 0 < self.depth_ratio < 0.5:
            raise ValueError("depth_ratio must lie in (0, 0.5)")
        if not 0 <= self.taper <= 1:
            raise ValueError("taper must lie in [0, 1]")

    @property
    def depth(self) -> float:
        """Rim-to-apex distance h = depth_ratio * diameter."""
        return self.depth_ratio * 2.0 * self.aperture_radius


@dataclass(frozen=True)
class EchoScene:
    """One simulated recording setup."""

    landmark: DishLandmark | None
    range_m: float
    off_axis_angle: float = 0.0   # degrees the landmark is turned away
    clutter_count: int = 0
    snr_db: float = math.inf
    seed: int = 0

    def __post_init__(self):
        if not 0.1 <= self.range_m <= 10.0:
            raise ValueError("range must lie in [0.1, 10] m")
        if not 0.0 <= self.off_axis_angle <= 90.0:
            raise ValueError("off_axis_angle must lie in [0, 90] degrees")
        if self.clutter_count < 0:
            raise ValueError("clutter_count must be nonnegative")


@dataclass(frozen=True, eq=False)
class ImpulseResponse:
    """Sparse tap train: (delay seconds, signed amplitude) pairs with
    strictly increasing delays. May be empty when no landmark is present."""

    taps: tuple[tuple[float, float], ...]

    def __post_init__(self):
        taps = tuple((float(d), float(a)) for d, a in self.taps)
        delays = [d for d, _ in taps]
        if any(d2 <= d1 for d1, d2 in zip(delays, delays[1:])):
            raise ValueError("tap delays must be strictly increasing")
        if not all(math.isfinite(d) and math.isfinite(a) for d, a in taps):
            raise ValueError("taps must be finite")
        object.__setattr__(self, "taps", taps)

    @property
    def delays(self) -> np.ndarray:
        return np.array([d for d, _ in self.taps])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([a for _, a in self.taps])


def sphere_radius(landmark: DishLandmark) -> float:
    """Radius of the sphere through the rim circle and the apex:
    R = (a^2 + h^2) / (2h)."""
    a = landmark.aperture_radius
    h = landmark.depth
    return (a * a + h * h) / (2.0 * h)


def _trace_batch(landmark: DishLandmark, tilt_rad: float, offsets: np.ndarray):
    """Trace axis-offset rays of one arrival direction through two specular
    bounces off the inner sphere.

    Rays enter the aperture plane y = h at the given lateral offsets with
    direction (sin tilt, -cos tilt). Returns (residual, excess, valid):
    residual is the signed angle between the exit direction and the exact
    return direction (zero for a retroreflected ray), excess is the two-way
    path length in excess of the central apex bounce, and valid marks rays
    whose two bounce points both lie on the cap with no third cap hit.
    """
    a = landmark.aperture_radius
    h = landmark.depth
    radius = sphere_radius(landmark)
    cx, cy = 0.0, radius
    dx, dy = math.sin(tilt_rad), -math.cos(tilt_rad)

    px = np.asarray(offsets, dtype=np.float64)
    py = np.full_like(px, h)

    # first intersection: entry points sit inside the sphere, so exactly one
    # forward root exists
    bq = (px - cx) * dx + (py - cy) * dy
    cq = (px - cx) ** 2 + (py - cy) ** 2 - radius * radius
    disc = bq * bq - cq
    valid = disc >= 0
    s1 = -bq + np.sqrt(np.where(valid, disc, 0.0))
    x1 = px + s1 * dx
    y1 = py + s1 * dy
    valid &= (s1 > 0) & (y1 <= h + _ON_CAP_TOL)

    nx = (cx - x1) / radius
    ny = (cy - y1) / radius
    dot = dx * nx + dy * ny
    d1x = dx - 2.0 * dot * nx
    d1y = dy - 2.0 * dot * ny

    # second intersection from a point on the sphere: t = -2 (P1-O).d1
    s2 = -2.0 * ((x1 - cx) * d1x + (y1 - cy) * d1y)
    x2 = x1 + s2 * d1x
    y2 = y1 + s2 * d1y
    valid &= (s2 > _ON_CAP_TOL) & (y2 <= h + _ON_CAP_TOL)

    nx = (cx - x2) / radius
    ny = (cy - y2) / radius
    dot = d1x * nx + d1y * ny
    d2x = d1x - 2.0 * dot * nx
    d2y = d1y - 2.0 * dot * ny

    # a third cap hit means the ray is not a clean double bounce
    s3 = -2.0 * ((x2 - cx) * d2x + (y2 - cy) * d2y)
    y3 = y2 + s3 * d2y
    valid &= ~((s3 > _ON_CAP_TOL) & (y3 <= h + _ON_CAP_TOL))

    # signed angle between the exit direction and the retro direction -d
    rx, ry = -dx, -dy
    residual = np.arctan2(d2x * ry - d2y * rx, d2x * rx + d2y * ry)

    # two-way excess over the central apex bounce, measured between
    # plane-wave fronts through the apex normal to the arrival direction:
    # inbound leg to P1 is P1.d, outbound leg from P2 is P2.d (the central
    # reference contributes zero since the apex sits on both fronts)
    excess = (x1 * dx + y1 * dy) + s2 + (x2 * dx + y2 * dy)
    return residual, excess, valid


def _returning_rays(landmark: DishLandmark, tilt_rad: float, grid: int = 2001):
    """Excess path lengths of all retroreflected double-bounce rays for one
    arrival direction, found by a sign-change sweep plus bisection."""
    a = landmark.aperture_radius
    eps = a * 1e-9
    offsets = np.linspace(-a + eps, a - eps, grid)
    residual, excess, valid = _trace_batch(landmark, tilt_rad, offsets)

    hits = []
    sign_change = (
        valid[:-1]
        & valid[1:]
        & (np.sign(residual[:-1]) != np.sign(residual[1:]))
    )
    for i in np.flatnonzero(sign_change):
        lo, hi = offsets[i], offsets[i + 1]
        r_lo = residual[i]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            r_mid, e_mid, v_mid = _trace_batch(landmark, tilt_rad, np.array([mid]))
            if not v_mid[0]:
                break
            if np.sign(r_mid[0]) == np.sign(r_lo):
                lo, r_lo = mid, r_mid[0]
            else:
                hi = mid
        else:
            r_fin, e_fin, v_fin = _trace_batch(
                landmark, tilt_rad, np.array([0.5 * (lo + hi)])
            )
            if v_fin[0] and abs(r_fin[0]) < 1e-9:
                hits.append(float(e_fin[0]))
    # exact zeros on the grid itself
    on_grid = valid & (residual == 0.0)
    hits.extend(float(e) for e in excess[on_grid])
    return hits


@functools.lru_cache(maxsize=None)
def _secondary_excess_path(landmark: DishLandmark) -> float:
    hits = _returning_rays(landmark, 0.0)
    if not hits:
        raise NoSecondaryPathError(
            "no returning double-bounce ray exists for this cap"
        )
    return min(hits)


def secondary_path_delay(
    landmark: DishLandmark, speed_of_sound: float = SPEED_OF_SOUND
) -> float:
    """Excess two-way delay of the shortest returning double-bounce ray at
    axis-parallel incidence, in seconds."""
    return _secondary_excess_path(landmark) / speed_of_sound


@functools.lru_cache(maxsize=None)
def max_secondary_angle(landmark: DishLandmark) -> float:
    """Largest off-axis angle (degrees) at which a returning double-bounce
    ray still exists. 0 when the cap is too shallow for one at all."""
    if not _returning_rays(landmark, 0.0):
        return 0.0
    lo, hi = 0.0, 90.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if _returning_rays(landmark, math.radians(mid)):
            lo = mid
        else:
            hi = mid
    return lo


def impulse_response(
    landmark: DishLandmark | None,
    scene: EchoScene,
    speed_of_sound: float = SPEED_OF_SOUND,
) -> ImpulseResponse:
    """Tap train of a landmark echo at the scene's range and orientation.

    Amplitudes share a 1/range^2 spreading factor: the edge tap is scaled by
    the rim taper, secondaries decay geometrically. Beyond the landmark's
    limiting angle the secondary taps vanish and the central tap is
    attenuated by the cosine of the off-axis angle.
    """
    if landmark is None:
        raise InvalidSceneError("scene has no landmark")
    h = landmark.depth
    received = 1.0 / (scene.range_m * scene.range_m)
    t_central = 2.0 * scene.range_m / speed_of_sound
    t_edge = 2.0 * (scene.range_m - h) / speed_of_sound

    try:
        delta = secondary_path_delay(landmark, speed_of_sound)
        limit = max_secondary_angle(landmark)
    except NoSecondaryPathError:
        delta, limit = None, 0.0
    facing = delta is not None and scene.off_axis_angle <= limit

    taps = []
    if landmark.taper > 0:
        taps.append((t_edge, landmark.taper * received))
    if facing:
        taps.append((t_central, received))
        for k in range(1, NUM_SECONDARY + 1):
            taps.append((t_central + k * delta, received * SECONDARY_DECAY**k))
    else:
        attenuated = received * math.cos(math.radians(scene.off_axis_angle))
        taps.append((t_central, attenuated))
    return ImpulseResponse(tuple(taps))


def synthesize_echo(
    chirp: Waveform,
    ir: ImpulseResponse,
    scene: EchoScene,
    *,
    crop_length: int = 1024,
    band: tuple[float, float] = LANDMARK_BAND,
) -> Waveform:
    """Render a recording: chirp convolved with the tap train, plus clutter
    reflections and white noise. Deterministic given the scene seed.

    Clutter delays are drawn uniformly but rejected from the landmark's crop
    window so range-gated labels stay clean; clutter amplitudes are
    log-uniform around the landmark's spreading scale. Noise is scaled so
    the ratio of the landmark component's power inside the crop window to
    the noise power falling inside the analysis band matches snr_db. Scenes
    without a landmark use the power a bare central echo would have at the
    scene range, so their noise floor matches landmark scenes.
    """
    fs = chirp.sample_rate
    center = range_to_sample(scene.range_m, fs)
    n_chirp = len(chirp)
    n_out = center + n_chirp + crop_length
    half = crop_length // 2

    clean = np.zeros(n_out)
    for delay, amp in ir.taps:
        idx = int(round(delay * fs))
        if idx >= n_out:
            continue
        stop = min(idx + n_chirp, n_out)
        clean[idx:stop] += amp * chirp.samples[: stop - idx]

    out = clean.copy()
    rng = np.random.default_rng(scene.seed)

    # clutter echoes: anywhere a chirp copy cannot leak into the crop window
    window_lo, window_hi = center - half, center + half
    excl_lo, excl_hi = window_lo - n_chirp, window_hi
    base = 1.0 / (scene.range_m * scene.range_m)
    max_start = n_out - n_chirp
    for _ in range(scene.clutter_count):
        idx = excl_lo
        while excl_lo < idx < excl_hi:
            idx = int(round(rng.uniform(0.0, max_start / fs) * fs))
        amp = base * 10.0 ** rng.uniform(math.log10(0.05), math.log10(0.5))
        out[idx:idx + n_chirp] += amp * chirp.samples

    if math.isfinite(scene.snr_db):
        if ir.taps:
            reference = clean
        else:
            reference = np.zeros(n_out)
            stop = min(center + n_chirp, n_out)
            reference[center:stop] += base * chirp.samples[: stop - center]
        lo = max(window_lo, 0)
        hi = min(window_hi, n_out)
        power = float(np.mean(reference[lo:hi] ** 2))
        band_fraction = (band[1] - band[0]) / (fs / 2.0)
        sigma = math.sqrt(power * 10.0 ** (-scene.snr_db / 10.0) / band_fraction)
        out += rng.normal(0.0, sigma, n_out)

    return Waveform(out, fs)

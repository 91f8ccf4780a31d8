"""Stochastic device and channel models.

Fiber attenuation, single-photon detection, polarization modulation, the
SFG-based Bell-state measurement and accidental coincidences. Every random
draw goes through the session's seeded numpy Generator, so whole runs are
reproducible bit-for-bit. Device specs are immutable values; a Generator is
owned by exactly one session.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .qstate import BellLabel, NoiseParams, TwoQubitState, fringe_coincidence

BELL_ORDER = (
    BellLabel.PHI_PLUS,
    BellLabel.PHI_MINUS,
    BellLabel.PSI_PLUS,
    BellLabel.PSI_MINUS,
)


def _check_probability(name: str, value: float):
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must be in [0, 1], got {value}")


def _check_nonnegative(name: str, value: float):
    if value < 0.0:
        raise DomainError(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class FiberSpec:
    length_km: float
    attenuation_db_per_km: float = 0.2

    def __post_init__(self):
        _check_nonnegative("length_km", self.length_km)
        _check_nonnegative("attenuation_db_per_km", self.attenuation_db_per_km)


@dataclass(frozen=True)
class DetectorSpec:
    efficiency: float
    dark_count_rate_hz: float = 0.0
    coincidence_window_s: float = 1e-9

    def __post_init__(self):
        _check_probability("efficiency", self.efficiency)
        _check_nonnegative("dark_count_rate_hz", self.dark_count_rate_hz)
        _check_nonnegative("coincidence_window_s", self.coincidence_window_s)


@dataclass(frozen=True)
class SfgSpec:
    conversion_efficiency: float
    max_rate_hz: float = 1e5

    def __post_init__(self):
        _check_probability("conversion_efficiency", self.conversion_efficiency)
        _check_nonnegative("max_rate_hz", self.max_rate_hz)


@dataclass(frozen=True)
class ModulatorSpec:
    rate_hz: float
    extinction_error: float = 0.0

    def __post_init__(self):
        if self.rate_hz <= 0.0:
            raise DomainError(f"rate_hz must be > 0, got {self.rate_hz}")
        _check_probability("extinction_error", self.extinction_error)


@dataclass(frozen=True)
class SourceSpec:
    pair_rate_hz: float
    heralding_noise: NoiseParams = field(default_factory=NoiseParams)

    def __post_init__(self):
        _check_nonnegative("pair_rate_hz", self.pair_rate_hz)


@dataclass(frozen=True)
class Devices:
    """The full device suite one session runs over."""

    alice_fiber: FiberSpec
    bob_fiber: FiberSpec
    detector: DetectorSpec
    sfg: SfgSpec
    modulator: ModulatorSpec
    source: SourceSpec


def transmittance(fiber: FiberSpec) -> float:
    """Fiber survival probability, 10^(-attenuation * length / 10)."""
    return 10.0 ** (-fiber.attenuation_db_per_km * fiber.length_km / 10.0)


def survive(rng: np.random.Generator, probability: float) -> bool:
    """One Bernoulli draw from the session RNG."""
    _check_probability("probability", probability)
    return bool(rng.random() < probability)


def sfg_bsm(
    state: TwoQubitState, spec: SfgSpec, rng: np.random.Generator
) -> BellLabel | None:
    """Bell-state measurement through sum-frequency generation.

    With probability conversion_efficiency the pair converts and the outcome
    is sampled from the Bell-basis diagonal of the state, so all four labels
    are distinguishable in a single shot; otherwise the pair is erased and
    None is returned. Misidentification enters only through state noise.
    """
    if rng.random() >= spec.conversion_efficiency:
        return None
    diagonal = state.bell_diagonal()
    weights = np.array([diagonal[label] for label in BELL_ORDER])
    weights = weights / weights.sum()
    draw = rng.random()
    cumulative = np.cumsum(weights)
    index = int(np.searchsorted(cumulative, draw, side="right"))
    return BELL_ORDER[min(index, 3)]


def modulate_and_detect(
    bit: int,
    mod: ModulatorSpec,
    photon_rate_hz: float,
    channel_eta: float,
    det: DetectorSpec,
    dwell_s: float,
    rng: np.random.Generator,
) -> int:
    """Detector clicks for one modulated symbol over a dwell time.

    Bit 0 leaves the polarization aligned for up-conversion (high level);
    bit 1 rotates it away so only the extinction_error fraction converts
    (low level). Dark counts add an independent Poisson background.
    """
    if dwell_s <= 0.0:
        raise DomainError(f"dwell_s must be > 0, got {dwell_s}")
    if bit not in (0, 1):
        raise DomainError(f"bit must be 0 or 1, got {bit}")
    _check_probability("channel_eta", channel_eta)
    gate = 1.0 if bit == 0 else mod.extinction_error
    mean = dwell_s * (
        photon_rate_hz * channel_eta * det.efficiency * gate + det.dark_count_rate_hz
    )
    return int(rng.poisson(mean))


def detection_waveform(
    bits: str,
    mod: ModulatorSpec,
    photon_rate_hz: float,
    channel_eta: float,
    det: DetectorSpec,
    rng: np.random.Generator,
    bins_per_bit: int = 5,
) -> tuple[np.ndarray, np.ndarray]:
    """Binned click counts over a modulated bit sequence.

    Each bit occupies 1/rate_hz seconds split into bins_per_bit histogram
    bins; returns (bin_centers_s, counts). Accumulation time and histogram
    bin width are independent display knobs, so both are exposed here.
    """
    if bins_per_bit < 1:
        raise DomainError(f"bins_per_bit must be >= 1, got {bins_per_bit}")
    bit_duration = 1.0 / mod.rate_hz
    bin_width = bit_duration / bins_per_bit
    centers = []
    counts = []
    for position, bit in enumerate(bits):
        for sub in range(bins_per_bit):
            centers.append((position + (sub + 0.5) / bins_per_bit) * bit_duration)
            counts.append(
                modulate_and_detect(
                    int(bit), mod, photon_rate_hz, channel_eta, det, bin_width, rng
                )
            )
    return np.array(centers), np.array(counts)


def accidental_rate(singles_1_hz: float, singles_2_hz: float, window_s: float) -> float:
    """Accidental coincidence rate singles_1 * singles_2 * window."""
    _check_nonnegative("singles_1_hz", singles_1_hz)
    _check_nonnegative("singles_2_hz", singles_2_hz)
    _check_nonnegative("window_s", window_s)
    return singles_1_hz * singles_2_hz * window_s


def fringe_scan(
    state: TwoQubitState,
    phases: np.ndarray,
    shots_per_phase: int,
    accidental_prob: float,
    rng: np.random.Generator,
) -> list[dict]:
    """Monte Carlo two-photon interference scan with accidental subtraction.

    At each analyzer phase (the partner analyzer held at zero), counts are
    binomial in the coincidence probability plus a Poisson accidental
    background whose expectation is subtracted off, mirroring how measured
    fringes are corrected before fitting.
    """
    _check_probability("accidental_prob", accidental_prob)
    if shots_per_phase < 1:
        raise DomainError(f"shots_per_phase must be >= 1, got {shots_per_phase}")
    rows = []
    expected_accidentals = shots_per_phase * accidental_prob
    for phase in phases:
        probability = fringe_coincidence(state, float(phase), 0.0)
        signal = int(rng.binomial(shots_per_phase, probability))
        accidentals = int(rng.poisson(expected_accidentals))
        corrected = (signal + accidentals - expected_accidentals) / shots_per_phase
        rows.append(
            {
                "phase_rad": float(phase),
                "raw_counts": signal + accidentals,
                "expected_accidentals": expected_accidentals,
                "corrected_rate": corrected,
            }
        )
    return rows

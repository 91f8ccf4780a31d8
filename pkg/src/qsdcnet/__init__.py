"""Deterministic simulator of an entanglement-based QSDC network."""

from .analysis import (
    FidelityEstimate,
    NoiseAssumption,
    QberEstimate,
    SecrecyReport,
    ThroughputReport,
    binary_entropy,
    fidelity_from_visibility,
    qber_from_transcript,
    secrecy_capacity_bound,
    session_secrecy_report,
    throughput,
)
from .errors import (
    CapacityExceeded,
    DomainError,
    InsufficientData,
    InvariantViolation,
    QsdcError,
    ScenarioError,
)
from .netplan import (
    ChannelPair,
    ConnectivityReport,
    UserId,
    WavelengthPlan,
    build_plan,
    channels_required,
    itu_name,
    verify_full_connectivity,
)
from .photonics import (
    Devices,
    DetectorSpec,
    FiberSpec,
    ModulatorSpec,
    SfgSpec,
    SourceSpec,
    accidental_rate,
    modulate_and_detect,
    sfg_bsm,
    survive,
    transmittance,
)
from .protocol import (
    Block,
    DetectionRecord,
    EveKind,
    EveModel,
    ProtocolConfig,
    QberThresholdPolicy,
    Session,
    SessionPhase,
    SessionTranscript,
    delay_control,
    encode_block,
    run_qsdc,
    run_security_detection,
    transmit_and_decode_block,
)
from .qstate import (
    BellLabel,
    NoiseParams,
    PauliEncoding,
    TimeBin,
    TwoQubitState,
    apply_encoding,
    apply_noise,
    bell_state,
    decode_bits,
    depolarizing_p_for_fidelity,
    encode_bits,
    fidelity,
    fringe_coincidence,
    visibility,
)
from .scenario import Scenario, load_scenario, scenario_from_dict

__version__ = "0.1.0"

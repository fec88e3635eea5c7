"""safesim: desk-scale model of a wireless multichannel EEG acquisition chain.

Signal generation, amplifier sampling with quantization and inter-channel
skew, packetized lossy transport, trigger-labeled CSV recording, and the
validation analyses (phase-fit RMSE, flash-response metrics, comparison
statistics) that quantify the chain end to end.
"""

from .device import (
    DEVICE_PRESETS,
    DeviceSpec,
    SampleFrame,
    SignalSource,
    adc_quantize,
    reference_device_spec,
    run_acquisition,
    safe_device_spec,
    sample_frame,
)
from .siggen import (
    DacModel,
    VepTemplate,
    biphasic_template,
    constant_source,
    gen_sinusoid,
    gen_vep_session,
    ramp_source,
    sweep_frequencies,
)
from .transport import (
    ContiguousRecord,
    Packet,
    PacketLossReport,
    loss_stats,
    packetize,
    read_capture,
    reassemble,
    transmit,
    write_capture,
)
from .triggering import (
    LabelMode,
    TriggerEvent,
    anchor_frame,
    flag_trigger_packets,
    jitter_triggers,
    label_packet_granular,
    label_sample_accurate,
    read_trigger_file,
    write_trigger_file,
)
from .recorder import (
    CSV_VERSION_TAG,
    MalformedHeaderError,
    RaggedRowError,
    Recording,
    RecordingFormatError,
    UnknownVersionError,
    read_csv,
    write_csv,
)
from .analysis import (
    ComparisonStats,
    DegenerateDataError,
    EmptyResultError,
    Epoch,
    MetricKind,
    SineFitResult,
    TrialSet,
    VepMetrics,
    epoch_sine,
    epoch_vep,
    fit_sine_phase,
    highpass,
    one_sample_ttest,
    percent_difference,
    reject_artifacts,
    session_vep_metrics,
    ttest_from_summary,
    vep_average,
    vep_metrics,
)
from .experiments import (
    AnalysisInputError,
    ConfigError,
    ExperimentConfig,
    analyze,
    run_sine_experiment,
    run_vep_experiment,
)

__version__ = "0.1.0"

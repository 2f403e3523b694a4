"""EEG/speech keyword classification with teacher-student distillation.

The pipeline: IIR preprocessing of multichannel EEG, statistical window
features, MFCC speech features, kernel-PCA or autoencoder reduction, a
GRU classifier trained with backpropagation through time and Adam, and
generalized distillation from a fused-feature teacher into an MFCC-only
student.
"""

from .datakit import (
    MetricsRecord,
    SplitAssignment,
    SyntheticSpec,
    TrialManifest,
    accuracy_table,
    generate_synthetic,
    load_matrix,
    save_matrix,
    split_counts,
    split_dataset,
)
from .distill import DistillConfig, SoftTargetSet, grid_sweep, soft_targets, student_loss, train_student
from .eeg import CHANNELS_31, extract_eeg_features, select_channels, window_stats
from .filters import (
    IirFilter,
    WindowSpec,
    apply_filter,
    design_bandpass,
    design_notch,
    frame_signal,
    frequency_response,
)
from .nn import (
    AdamState,
    GruParams,
    ModelParams,
    TrainConfig,
    adam_step,
    evaluate,
    forward,
    gru_step,
    init_model,
    loss_and_grads,
    train,
)
from .reduce import (
    AutoencoderModel,
    KpcaModel,
    autoencoder_encode,
    autoencoder_fit,
    explained_variance_curve,
    kpca_fit,
    kpca_transform,
    stack_time_deltas,
)
from .speech import MfccConfig, add_deltas, extract_mfcc, mel_filterbank, mfcc
from .types import Dataset, FeatureSequence, LabeledExample, MultichannelSignal

__version__ = "0.1.0"

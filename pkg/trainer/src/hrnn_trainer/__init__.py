"""Training side of the hrnnoise system: data mixing, losses, weight export."""

from .data import Manifest, build_example, load_manifest, mix_at_snr
from .export import export_weights, write_weights_file
from .losses import loss_combined, loss_ma, loss_msa
from .network import MaskNet, context_concat
from .pipeline import (analyze_sequence, bark_compress_sequence,
                       features_from_signal, magnitudes_from_signal,
                       normalize_sequence, power_db)
from .targets import wf_target
from .train import TrainConfig, train

__version__ = "0.1.0"

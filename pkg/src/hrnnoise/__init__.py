"""Streaming low-latency noise reduction with a tiny recurrent mask predictor."""

from .audio import SAMPLE_RATE, read_wav, write_wav
from .complexity import CostReport, flop_rate, instrumented_count, param_count
from .engine import (DEFAULT_ARCH, Engine, EngineConfig, LatencyReport,
                     enhance_file, enhance_stream, latency_report)
from .fbank import (FbankConfig, FbankState, Spectrum, algorithmic_delay,
                    analyze, synthesize)
from .features import (BarkLayout, FeatureFrame, NormalizerState,
                       alpha_from_tau, bark_compress, bark_expand,
                       bark_layout, normalize, to_db)
from .metrics import EvalResult, delta_stoi, evaluate_triple, rmse, si_sdr, stoi
from .model import (ArchConfig, GruWeights, ModelState, ModelWeights,
                    WeightFileError, WeightFormatError, WeightTruncationError,
                    WeightValidationError, gru_step, load_weights, push_frame,
                    random_weights, read_weights_file, run_sequence,
                    save_weights, write_weights_file)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

"""Meta-learned, statistics-augmented CSI feedback autoencoder toolkit."""

from .augment import (AugmentConfig, ChannelStats, UnknownScheme,
                      augment_baseline, augment_channel, augment_dataset,
                      estimate_stats)
from .channel import (CsiEigen, SimScenario, SystemConfig, TimeChannel,
                      channel_to_csi, default_scenario, simulate_ue)
from .config import ConfigError, ExperimentConfig, load_experiment_config
from .linalg import (DelayOverflow, NotHermitian, RankDeficient,
                     complex_gaussian, dft_delay_to_freq, gram_schmidt,
                     hermitian_eig, kron, top_eigvec)
from .metaenv import (BasisSet, DegenerateColumn, MetaEnv, MetaEnvConfig,
                      MetaTask, build_bases, build_meta_env, iter_meta_tasks,
                      sample_task_structure, synth_sample)
from .model import (BadBitstreamLength, ModelConfig, ZeroColumn, decode,
                    encode, init_params, loss_and_grad, sgcs)
from .rng import RngStream
from .train import (ConvergenceLog, TrainConfig, evaluate, inner_update,
                    meta_train, target_retrain)

__all__ = [
    "AugmentConfig", "BadBitstreamLength", "BasisSet", "ChannelStats",
    "ConfigError", "ConvergenceLog", "CsiEigen", "DegenerateColumn",
    "DelayOverflow", "ExperimentConfig", "MetaEnv", "MetaEnvConfig",
    "MetaTask", "ModelConfig", "NotHermitian", "RankDeficient", "RngStream",
    "SimScenario", "SystemConfig", "TimeChannel", "TrainConfig",
    "UnknownScheme", "ZeroColumn", "augment_baseline", "augment_channel",
    "augment_dataset", "build_bases", "build_meta_env", "channel_to_csi",
    "complex_gaussian", "decode", "default_scenario", "dft_delay_to_freq",
    "encode", "estimate_stats", "evaluate", "gram_schmidt", "hermitian_eig",
    "init_params", "inner_update", "iter_meta_tasks", "kron",
    "load_experiment_config", "loss_and_grad", "meta_train",
    "sample_task_structure", "sgcs", "simulate_ue", "synth_sample",
    "target_retrain", "top_eigvec",
]
__version__ = "0.1.0"

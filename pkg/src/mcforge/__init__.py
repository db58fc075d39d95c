"""mcforge: rigid-motion MRI k-space corruption and learned correction.

Simulates motion-corrupted acquisitions line by line (rotations re-sample
the spectrum, translations add phase ramps), trains a small encoder-decoder
to undo the artifacts with a two-stage L1 / L1+TV objective, and evaluates
SSIM/PSNR against severity.
"""

from .backend import active_backend
from .core import fft2, ifft2, load_grid, load_image, load_pgm, normalize, save_grid, save_image, save_pgm
from .errors import (ConfigError, DegenerateTrajectoryError, DimensionError,
                     DomainError, FormatError, McforgeError, ParameterError,
                     SingularFitError)
from .loss import STAGE1, STAGE2, LossConfig, hybrid_loss, l1_loss, tv_loss
from .manifest import PairRecord, load_pairs, read_manifest, write_manifest
from .metrics import (MetricRow, SsimConfig, evaluate_manifest, fit_line, psnr,
                      read_report, ssim, summarize, write_report)
from .network import (AdamState, NetParams, NetSpec, TrainConfig, TrainHistory,
                      adam_step, backward, forward, init_params, load_checkpoint,
                      params_digest, predict_batch, save_checkpoint,
                      train_schedule, train_two_stage)
from .simulator import (CorruptionOptions, build_dataset, corrupt,
                        dft_eval_oracle, nufft_eval, phantom)
from .trajectory import (center_normalize, constant_trajectory, load_trajectory,
                         save_trajectory, severity, synth, to_inplane)

__version__ = "0.1.0"

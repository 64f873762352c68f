"""Raw-burst super-resolution toolkit.

Physical degradation operators (warp, bilinear downsample, RGGB mosaick)
with exact adjoints, synthetic burst generation through an inverse camera
pipeline, ECC burst alignment, and a majorize-minimize proximal solver
with pluggable regularizers.  Metrics are computed in the linear sensor
space.
"""

from .align import (AlignConfig, AlignmentError, AlignmentResult, align_burst,
                    ecc_align, raw_to_luma)
from .image_io import (Burst, FormatError, read_srgb_png, read_tensor,
                       srgb_decode, srgb_encode, write_srgb_png, write_tensor)
from .metrics import MetricReport, psnr, ssim
from .operators import (AffineWarp, DegradationConfig, degrade,
                        degrade_adjoint, downsample, downsample_adjoint,
                        mosaick, mosaick_adjoint, operator_norm_estimate,
                        warp, warp_adjoint)
from .priors import (GaussianSmootherPrior, IdentityPrior, Regularizer,
                     TotalVariationPrior, make_prior, total_variation)
from .solver import (SolveReport, SolverConfig, data_fidelity, estimate_sigma,
                     gradient_step, initialize, load_solver_config, objective,
                     reconstruct)
from .synthesis import (CameraParams, NoiseParams, SynthConfig, add_noise,
                        linear_raw_to_srgb, load_scene, sample_noise_params,
                        sample_warps, save_scene, srgb_to_linear_raw,
                        synthesize)

__version__ = "0.1.0"

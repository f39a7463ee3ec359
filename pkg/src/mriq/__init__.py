"""Volumetric MRI artifact simulation with analytic quality scores."""
from .volume import (Volume, VolumeStats, normalize_intensity, pad_center_crop, preprocess,
                     resample_isotropic, stats)
from .nifti import load_volume, save_volume
from .spectral import KSpace, fft3_centered, high_freq_count, ifft3_centered
from .distortion import (DistortionKind, DistortionRecord, apply_bias_field, apply_blur,
                         apply_contrast, apply_gibbs_ringing, apply_motion_ghosting,
                         apply_rician_noise, sample_params)
from .metrics import (LossParams, QualityVector, aggregate_quality, contrast_sdr, cvr,
                      flip_average, focal_mse, ghost_modulation, hf_ratio, psnr, psnr_score,
                      ssim3d, truncation_ratio)
from .augment import (AugmentSpec, elastic_deform, flip, random_augment, rotate,
                      skull_strip_crop, translate)
from .pipeline import (DatasetManifest, SampleRecord, generate_dataset, generate_sample,
                       score_report)

__version__ = "0.1.0"

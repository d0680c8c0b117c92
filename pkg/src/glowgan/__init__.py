"""HDR image generation from in-the-wild LDR photos, and unsupervised inverse tone mapping.

A generator produces linear radiance; a differentiable stochastic camera
(random exposure, clipping, random response curve) turns each sample into an
LDR image before the discriminator sees it, so only LDR data is needed.
"""

from .camera import MEAN_CRF, CameraPriors, CrfParams, blend_hdr, camera_project, crf_apply, crf_invert, merge_exposures, saturation_mask
from .image import ImageFormatError, LdrImage, RadianceImage, read_pfm, read_ppm, write_pfm, write_ppm
from .itm import InversionConfig, InversionResult, invert, invert_multimodal
from .metrics import dr_percentiles, dynamic_range, hist_chi2, psnr
from .scenes import SceneConfig, build_ldr_dataset
from .training import TrainConfig, sample_hdr, train

__version__ = "0.1.0"

__all__ = [
    "MEAN_CRF",
    "CameraPriors",
    "CrfParams",
    "ImageFormatError",
    "InversionConfig",
    "InversionResult",
    "LdrImage",
    "RadianceImage",
    "SceneConfig",
    "TrainConfig",
    "blend_hdr",
    "build_ldr_dataset",
    "camera_project",
    "crf_apply",
    "crf_invert",
    "dr_percentiles",
    "dynamic_range",
    "hist_chi2",
    "invert",
    "invert_multimodal",
    "merge_exposures",
    "psnr",
    "read_pfm",
    "read_ppm",
    "sample_hdr",
    "saturation_mask",
    "train",
    "write_pfm",
    "write_ppm",
]

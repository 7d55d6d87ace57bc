# src/mri/__init__.py

"""
Módulo del modelo de adquisición de resonancia.
Contiene el operador de codificación, las máscaras y las métricas.
"""

__version__ = "1.0.0"
__author__ = "UEM Student"

from .masks import make_mask, make_pseudo_radial_mask, make_pseudo_spiral_mask, make_vds_mask
from .metrics import evaluate_all, frame_metrics, psnr, rmse, ssim
from .operators import adjoint_encode, casorati, fft2c, forward_encode, ifft2c
from .types import ComplexImageSeries, CoilSensitivities, MultiCoilKSpace, SamplingMask

__all__ = ['make_mask', 'make_pseudo_radial_mask', 'make_pseudo_spiral_mask', 'make_vds_mask',
           'evaluate_all', 'frame_metrics', 'psnr', 'rmse', 'ssim',
           'adjoint_encode', 'casorati', 'fft2c', 'forward_encode', 'ifft2c',
           'ComplexImageSeries', 'CoilSensitivities', 'MultiCoilKSpace', 'SamplingMask']

"""Blind graphical video watermarking toolkit.

Pipeline: partition a watermark into patches, route each patch to its
most similar frame and region (coarse-to-fine matching), embed patch
content plus a redundant position code into wavelet LL coefficients via
quantization index modulation, then blindly extract and reassemble the
layout with confidence-guided recovery.  Wavelet scan orders and a
selective state-space scan kernel are included as verified reference
components, along with a distortion suite and quality metrics.
"""

from .tensor_io import FrameSequence, WatermarkImage, load_frames, load_watermark, save_frames
from .wavelet import dwt2, dwt3, idwt2, idwt3
from .scanning import ScanOrder, apply_order, scan_2d_freq, scan_3d_local, scan_3d_vanilla
from .ssm import SsmParams, selective_scan
from .matching import AssignmentPlan, partition, plan
from .poscodec import DecodedPatch, decode_position, encode_position, recover_layout
from .embedder import QimConfig, embed, extract, qim_decode_bits, qim_embed_bits
from .distortion import DistortionSpec, apply as apply_distortion, h264_roundtrip
from .metrics import MetricsReport, evaluate, mse_pair, psnr, ssim
from .pipeline import embed_video, extract_video

__version__ = "0.1.0"

__all__ = [
    "FrameSequence", "WatermarkImage", "load_frames", "load_watermark", "save_frames",
    "dwt2", "idwt2", "dwt3", "idwt3",
    "ScanOrder", "scan_2d_freq", "scan_3d_local", "scan_3d_vanilla", "apply_order",
    "SsmParams", "selective_scan",
    "AssignmentPlan", "partition", "plan",
    "DecodedPatch", "encode_position", "decode_position", "recover_layout",
    "QimConfig", "qim_embed_bits", "qim_decode_bits", "embed", "extract",
    "DistortionSpec", "apply_distortion", "h264_roundtrip",
    "MetricsReport", "evaluate", "mse_pair", "psnr", "ssim",
    "embed_video", "extract_video",
]

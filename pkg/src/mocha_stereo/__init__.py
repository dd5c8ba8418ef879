"""Motif-channel stereo matching at desk scale."""

from .config import RunConfig, load_config, parse_config
from .features import extract_context, extract_features
from .metrics import bad_tau, epe, evaluate, total_loss
from .motif import MotifBank, MotifChannels, matrix_profile_1d, motif_channels
from .pipeline import PipelineWeights, VolumeObjective, match
from .refine import StereoRig, reconstruction_error, remp
from .scene import SceneSpec, synth_scene, two_plane_spec
from .volume import camp, channel_correlation, gwc_volume, init_disparity, mccv_combine

__version__ = "0.1.0"

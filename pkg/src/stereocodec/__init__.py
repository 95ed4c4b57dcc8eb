"""Learned stereo video compression.

Rectified stereo clips are coded jointly: cross-view enhancement blocks let
the two views share features during analysis and synthesis, and a
view-interleaved entropy model conditions each channel slice on both views'
already decoded content.  See the README for the layout and the CLI.
"""

__version__ = "0.1.0"

from stereocodec.codec import StereoVideoCodec
from stereocodec.config import CodecConfig
from stereocodec.pipeline import StereoFrameCodec

__all__ = ["CodecConfig", "StereoFrameCodec", "StereoVideoCodec", "__version__"]

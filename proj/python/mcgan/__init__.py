"""Bindings for the mcgan C++ core."""

try:
    from ._mcgan import *  # noqa: F401,F403
    from ._mcgan import __doc__  # noqa: F401
except ImportError:  # in-tree build: the extension sits next to the package
    from _mcgan import *  # noqa: F401,F403

__all__ = [
    "ConfigError", "ShapeError", "IoError", "LoadError", "InputError", "NumericError",
    "synth_scene", "augment", "classify_pixels", "lr_at",
    "gan_loss_d", "gan_loss_g", "fm_loss",
    "pixel_accuracy", "iou", "evaluate",
    "synth", "train", "Model",
]

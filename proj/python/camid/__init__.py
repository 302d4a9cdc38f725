"""Camera source identification: PRNU and camera-model fingerprint fusion.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface.
"""

from camid._core import (  # noqa: F401
    CamidError,
    FusionModel,
    __version__,
    crop_center,
    denoise,
    distance_pair,
    estimate_prnu,
    fit_mcd,
    fold_periodic,
    load_fusion,
    load_image_file,
    load_plane,
    ncc,
    render_image,
    residual,
    roc_auc,
    save_plane,
    simulate_dataset,
    train_fusion,
    wiener_dft,
    zero_mean,
)

__all__ = [
    "CamidError",
    "FusionModel",
    "__version__",
    "crop_center",
    "denoise",
    "distance_pair",
    "estimate_prnu",
    "fit_mcd",
    "fold_periodic",
    "load_fusion",
    "load_image_file",
    "load_plane",
    "ncc",
    "render_image",
    "residual",
    "roc_auc",
    "save_plane",
    "simulate_dataset",
    "train_fusion",
    "wiener_dft",
    "zero_mean",
]

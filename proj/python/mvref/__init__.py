"""Multi-view reference synthesis (GARS) and reference-based SR inference (DHFS).

Images are float arrays of shape (H, W, 3) in [0, 1]; depth maps are (H, W)
with NaN marking invalid pixels.
"""

from ._mvref import (
    FormatError,
    InvariantViolation,
    Network,
    cli,
    count_parameters,
    downsample_bicubic,
    evaluate,
    hf_index_maps,
    init_weights,
    l1_loss,
    psnr,
    read_pfm,
    read_png,
    run_gars,
    select_nearby_views,
    ssim,
    synth_scene,
    upsample_bicubic,
    write_pfm,
    write_png,
)

__version__ = "0.1.0"

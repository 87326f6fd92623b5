"""Copy-move forgery synthesis and gradient-reversal domain adaptation."""

from ._grlforge import (
    GrlforgeError,
    RegionSpec,
    SynthConfig,
    TransformParams,
    apply_copy_move,
    evaluate_checkpoint,
    gen_base_image,
    grl_backward,
    grl_forward,
    inpaint_remove,
    lambda_at,
    make_copy_move,
    run_eval,
    run_gradcheck,
    run_synth,
    run_toy,
    run_train,
)

__all__ = [
    "GrlforgeError",
    "RegionSpec",
    "SynthConfig",
    "TransformParams",
    "apply_copy_move",
    "evaluate_checkpoint",
    "gen_base_image",
    "grl_backward",
    "grl_forward",
    "inpaint_remove",
    "lambda_at",
    "make_copy_move",
    "run_eval",
    "run_gradcheck",
    "run_synth",
    "run_toy",
    "run_train",
]

"""Vision-language UAV navigation workbench."""

from ._vlfly import (
    VlflyError,
    compute_metrics,
    embed_text,
    encode_instruction,
    fnv1a64,
    generate_scenario,
    gradient_check,
    read_pool,
    retrieve,
    run_benchmark,
    run_episode,
    scale_waypoint,
    softmax,
    step_dynamics,
    tokenize,
    write_descriptor_pool,
)

__all__ = [
    "VlflyError",
    "compute_metrics",
    "embed_text",
    "encode_instruction",
    "fnv1a64",
    "generate_scenario",
    "gradient_check",
    "read_pool",
    "retrieve",
    "run_benchmark",
    "run_episode",
    "scale_waypoint",
    "softmax",
    "step_dynamics",
    "tokenize",
    "write_descriptor_pool",
]

from ._nav3d import (
    Environment,
    Policy,
    __version__,
    action_from_index,
    compute_reward,
    costmap_image,
    height_filter,
    init_checkpoint,
    num_actions,
    relative_goal,
    remove_statistical_outliers,
    voxel_downsample,
)

__all__ = [
    "Environment",
    "Policy",
    "__version__",
    "action_from_index",
    "compute_reward",
    "costmap_image",
    "height_filter",
    "init_checkpoint",
    "num_actions",
    "relative_goal",
    "remove_statistical_outliers",
    "voxel_downsample",
]

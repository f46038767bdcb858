"""uncmap: probabilistic vectorized road maps and their evaluation stack.

Core layers:

- :mod:`uncmap.geometry` - points, poses, polylines, resampling, frames.
- :mod:`uncmap.probmap` - Laplace vertex distributions, NLL loss, scale
  transforms, uncertainty-augmented vertex features.
- :mod:`uncmap.fitting` - closed-form and gradient Laplace MLE.
- :mod:`uncmap.map_eval` - Chamfer distance, per-class AP, mAP.
- :mod:`uncmap.pred_eval` - minADE / minFDE / miss rate, binned CIs.
- :mod:`uncmap.calibration` - interval coverage, reliability, ECE.
- :mod:`uncmap.synth` - deterministic synthetic scenes, noise model, and
  two goal-snapping baseline predictors.
- :mod:`uncmap.io` / :mod:`uncmap.cli` - file formats, manifests, reports,
  and the ``uncmap`` command-line pipeline.
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    ElementClass,
    MapElement,
    Polyline,
    Pose2,
    VectorMap,
    resample,
    transform_point,
    transform_points,
)
from .probmap import (  # noqa: F401
    B_FLOOR,
    LaplaceParam,
    ProbMapElement,
    ProbVectorMap,
    ProbVertex,
    VertexFeature,
    b_from_sigma,
    density,
    encode_vertex,
    log_density,
    mean_map,
    nll_loss,
    rotate_uncertainty,
    sample_map,
    sigma_from_b,
    standardize_map,
)
from .fitting import FitConfig, FitResult, fit_closed_form, fit_gradient, fit_map  # noqa: F401
from .map_eval import (  # noqa: F401
    APConfig,
    ChamferConfig,
    MapEvalReport,
    average_precision,
    chamfer,
    chamfer_elements,
    evaluate_map,
    evaluate_scenes,
)
from .pred_eval import (  # noqa: F401
    BinnedStat,
    PredEvalReport,
    TrajectorySet,
    binned_ci,
    evaluate_trajectories,
    min_ade,
    min_fde,
    miss,
    miss_rate,
)
from .calibration import (  # noqa: F401
    CoverageReport,
    ReliabilityReport,
    coverage,
    coverage_arrays,
    laplace_interval,
    match_vertex_pairs,
    reliability,
)
from .synth import (  # noqa: F401
    AgentTrack,
    Condition,
    DatasetConfig,
    Layout,
    NoiseModel,
    Occluder,
    SceneSpec,
    SyntheticDataset,
    build_dataset,
    generate_scene,
    observe,
    predict_blind,
    predict_weighted,
)

"""edgebench: benchmark image-enhancement pipelines by Canny edge response
inside object masks.
"""

from .edges import CannyParams, canny, edges_to_image
from .enhance import (
    BrighteningParams,
    ClaheParams,
    RetinexParams,
    clahe,
    color_restoration,
    msr,
    msrcr,
    radial_brighten,
    ssr,
)
from .errors import (
    ChannelMismatchError,
    CorruptDataError,
    DimensionMismatchError,
    ImageError,
    IncompleteRecordsError,
    InvalidParameterError,
    OutOfBoundsError,
    UnsupportedFormatError,
)
from .evaluate import (
    CropId,
    EvalRecord,
    ReportNode,
    build_report_tree,
    emit_report_json,
    emit_table,
    evaluate_crop,
    summarize_method_effect,
    tp_count,
)
from .imagecore import (
    Rect,
    apply_mask,
    crop,
    hsv_to_rgb,
    load_image,
    load_mask,
    rgb_to_hsv,
    save_image,
)
from .pipeline import (
    Method,
    Pipeline,
    PipelineParams,
    enumerate_pipelines,
    parse_pipeline,
    pipeline_name,
    run_pipeline,
)

__version__ = "0.1.0"

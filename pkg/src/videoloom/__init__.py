"""videoloom: trajectory-grounded video conversation data and diagnostics.

The toolkit parses per-frame subject detections, associates them into
identity-stable trajectories, gates trajectory quality, and renders
question/answer records whose answers always span every frame a queried
subject appears in. A second half diagnoses how much a corpus actually
depends on temporal context: perplexity-difference scoring with tercile
bucketing, and discounted objective-gap sweeps over frame-subset policies.
"""

__version__ = "0.1.0"

from .boxes import BoundingBox, iou
from .errors import ConfigError, PipelineError, RecordError, VideoloomError
from .records import ClipSpec, Detection, FrameRecord

__all__ = [
    "__version__",
    "BoundingBox",
    "iou",
    "ClipSpec",
    "Detection",
    "FrameRecord",
    "VideoloomError",
    "RecordError",
    "ConfigError",
    "PipelineError",
]

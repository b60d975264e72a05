"""comicpipe: structured visual cues from comic strips, fed to a multimodal LLM.

The pipeline segments a strip into panels, detects character and text boxes
with an open-set detector behind a uniform wire protocol, identifies
characters zero-shot against per-series label registries, OCRs the dialogue,
assembles everything into a per-panel context, and prompts a multimodal
model either bare or with that context appended.
"""

from .context import ComicContext, PanelContext, build_context, parse_context, serialize_context
from .errors import (
    BackendError,
    BackendUnavailableError,
    ComicPipeError,
    ConfigError,
    ImageDecodeError,
    InvalidInputError,
    ProtocolError,
    SeriesNotFoundError,
    TokenBudgetExceededError,
)
from .evaluation import (
    EvalReport,
    GroundTruthAnnotation,
    average_precision,
    mean_average_precision,
    weighted_prf,
)
from .geometry import BoundingBox, Detection, area_fraction, iou, nms
from .identity import (
    UNKNOWN_CHARACTER,
    CharacterLabelRegistry,
    IdentifiedCharacter,
    candidate_labels,
    identify_characters,
)
from .panelizer import Panel, PanelizerConfig, RasterImage, extract_panels, reading_order
from .postprocess import DetectorConfig, assign_to_panels, filter_detections
from .prompting import (
    BASE_PROMPT,
    CONTEXT_CONNECTOR,
    OverflowPolicy,
    PromptBundle,
    PromptMode,
    TokenBudget,
    check_budget,
    render_prompt,
)
from .textflow import OcrLine, OcrResult, normalize_balloon

__version__ = "0.1.0"

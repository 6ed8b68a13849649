from .audio import ConditionedAudio, condition_audio, read_wav, write_wav
from .contours import AcousticContours, ContourConfig, extract_contours
from .informed import InformedFeatureError, assemble_informed_vector, compute_informed_features
from .loudness import integrated_loudness, k_weighting_sos, normalize_loudness
from .normalize import NormalizationError, NormalizationReference, fit_reference, normalize
from .schema import CATEGORIES, FeatureSpec, InformedFeatureSchema, default_schema

__all__ = [
    "ConditionedAudio",
    "condition_audio",
    "read_wav",
    "write_wav",
    "AcousticContours",
    "ContourConfig",
    "extract_contours",
    "InformedFeatureError",
    "assemble_informed_vector",
    "compute_informed_features",
    "integrated_loudness",
    "k_weighting_sos",
    "normalize_loudness",
    "NormalizationError",
    "NormalizationReference",
    "fit_reference",
    "normalize",
    "CATEGORIES",
    "FeatureSpec",
    "InformedFeatureSchema",
    "default_schema",
]

from .manifest import TASKS, UtteranceRecord, load_alignments, load_manifest
from .sfm1 import Sfm1Error, read_sfm1, read_sfm1_bytes, write_sfm1, write_sfm1_bytes
from .splits import SplitPlan, make_cross_lingual_splits, make_nested_splits

__all__ = [
    "TASKS",
    "UtteranceRecord",
    "load_alignments",
    "load_manifest",
    "Sfm1Error",
    "read_sfm1",
    "read_sfm1_bytes",
    "write_sfm1",
    "write_sfm1_bytes",
    "SplitPlan",
    "make_cross_lingual_splits",
    "make_nested_splits",
]

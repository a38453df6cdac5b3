"""Attack data generation: technique plugins and checkpointed runs."""

from .runner import (
    Checkpoint,
    StopGeneration,
    generate_dataset,
    load_checkpoint,
)
from .techniques import (
    CorruptCheckpoint,
    DatagenError,
    DuplicateTechnique,
    GeneratedSample,
    Intent,
    TechniquePlugin,
    TechniqueRegistry,
    UnknownTechnique,
    apply_technique,
    builtin_registry,
    sample_id_for,
)

__all__ = [
    "Checkpoint", "CorruptCheckpoint", "DatagenError", "DuplicateTechnique",
    "GeneratedSample", "Intent", "StopGeneration", "TechniquePlugin",
    "TechniqueRegistry", "UnknownTechnique", "apply_technique",
    "builtin_registry", "generate_dataset", "load_checkpoint", "sample_id_for",
]

"""Road grade estimation from smartphone-style sensor traces."""

from roadgrade._core import (
    absolute_error,
    butterworth_lowpass,
    crh,
    grade_from_elevation,
    gradient_error,
    run_pipeline,
    shape_similarity,
    synth_dataset,
)

__all__ = [
    "absolute_error",
    "butterworth_lowpass",
    "crh",
    "grade_from_elevation",
    "gradient_error",
    "run_pipeline",
    "shape_similarity",
    "synth_dataset",
]

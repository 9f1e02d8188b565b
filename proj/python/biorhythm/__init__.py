"""Population biorhythm analytics (Python bindings)."""

from ._core import (
    EdgeHandling,
    SpikeVariant,
    __version__,
    characteristic_rhythm,
    generate_cohort_csv,
    kl_divergence,
    outlier_fraction,
    outlier_growth,
    spike_distance,
    spike_function,
    welch_psd,
)

__all__ = [
    "EdgeHandling",
    "SpikeVariant",
    "__version__",
    "characteristic_rhythm",
    "generate_cohort_csv",
    "kl_divergence",
    "outlier_fraction",
    "outlier_growth",
    "spike_distance",
    "spike_function",
    "welch_psd",
]

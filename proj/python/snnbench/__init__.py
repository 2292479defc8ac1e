"""Python access to the spiking-network benchmark core."""

import json

from . import _core
from ._core import (
    Network,
    cka,
    cka_matrix,
    fgsm,
    hsic_biased,
    hsic_unbiased,
    normalize_config,
    preset_names,
    preset_yaml,
    probe,
    synth_dataset,
)


def run_experiment(config: str, threads: int = 0) -> dict:
    """Run a config (YAML text) and return the report as a dict."""
    return json.loads(_core.run_experiment_json(config, threads))


__all__ = [
    "Network",
    "cka",
    "cka_matrix",
    "fgsm",
    "hsic_biased",
    "hsic_unbiased",
    "normalize_config",
    "preset_names",
    "preset_yaml",
    "probe",
    "run_experiment",
    "synth_dataset",
]

"""Named experiment pipelines and their configs."""

from .complementary import ComplementaryConfig, run_complementary_experiment
from .config import config_dict, parse_config, parse_config_text, write_config
from .ddcm import DdcmConfig, run_ddcm_demo
from .delta import run_delta_experiment
from .io import write_csv, write_json
from .spectrogram import SpectrogramConfig, run_spectrogram_demo
from .synth import AcceleroConfig, synth_accelerometer

EXPERIMENTS = {
    "delta": (AcceleroConfig, run_delta_experiment),
    "complementary": (ComplementaryConfig, run_complementary_experiment),
    "spectrogram": (SpectrogramConfig, run_spectrogram_demo),
    "ddcm": (DdcmConfig, run_ddcm_demo),
}

__all__ = [
    "AcceleroConfig",
    "ComplementaryConfig",
    "DdcmConfig",
    "SpectrogramConfig",
    "EXPERIMENTS",
    "config_dict",
    "parse_config",
    "parse_config_text",
    "run_complementary_experiment",
    "run_ddcm_demo",
    "run_delta_experiment",
    "run_spectrogram_demo",
    "synth_accelerometer",
    "write_config",
    "write_csv",
    "write_json",
]

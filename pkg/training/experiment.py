# SPDX-License-Identifier: MIT
#
"""Assemble model, training and scene settings from config.cfg, a flat JSON document and command-line overrides"""
import dataclasses
import json
from dataclasses import dataclass

from data.synth import SceneConfig
from model.config import ModelConfig, ModelConfigError
from training.config import TrainConfig
from data.dataset import DatasetError
from utils.config import ConfigError, read_config, build_config, field_names, parse_overrides, CONFIG_PATH
from utils.custom_logging import logger

SECTIONS = {'model': ModelConfig, 'train': TrainConfig, 'scene': SceneConfig}


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig
    train: TrainConfig
    scene: SceneConfig

    def to_dict(self) -> dict:
        return {'model': self.model.to_dict(), 'train': dataclasses.asdict(self.train), 'scene': dataclasses.asdict(self.scene)}

    def replace(self, **values):
        """Copy with flat keys routed like an override, e.g. replace(seed=3, use_dfp=False)"""
        return _assemble(self._values(), values, 'replace()')

    def _values(self) -> dict:
        return {section: dataclasses.asdict(getattr(self, section)) for section in SECTIONS}


def _route(values: dict, flat: dict, source: str):
    for key, value in flat.items():
        targets = [section for section, config_type in SECTIONS.items() if key in field_names(config_type)]
        if not targets:
            raise ConfigError(f'unknown setting {key!r} in {source}')
        for section in targets:
            values[section][key] = value


def _assemble(values: dict, flat: dict, source: str) -> ExperimentConfig:
    values = {section: dict(v) for section, v in values.items()}
    _route(values, flat, source)
    try:
        experiment = ExperimentConfig(*(build_config(config_type, values[section]) for section, config_type in SECTIONS.items()))
    except (ModelConfigError, DatasetError, TypeError) as e:
        raise ConfigError(f'invalid settings from {source}: {e}') from e
    _check_consistency(experiment)
    return experiment


def _check_consistency(experiment: ExperimentConfig):
    if experiment.model.num_classes != experiment.scene.num_classes:
        raise ConfigError(f'model and scene disagree on num_classes: {experiment.model.num_classes} vs {experiment.scene.num_classes}')
    if experiment.train.crop_size > experiment.scene.image_size:
        raise ConfigError(f'crop_size {experiment.train.crop_size} exceeds the scene image size {experiment.scene.image_size}')
    try:
        experiment.model.check_input_extent(experiment.train.crop_size, experiment.train.crop_size)
    except ModelConfigError as e:
        raise ConfigError(f'crop_size: {e}') from e


def load_experiment_config(path=None, overrides=(), defaults=CONFIG_PATH) -> ExperimentConfig:
    """config.cfg sections, then the flat JSON document at `path`, then `key=value` overrides"""
    parser = read_config(defaults)
    values = {section: dict(parser[section]) if parser.has_section(section) else {} for section in SECTIONS}
    for section, config_type in SECTIONS.items():
        unknown = set(values[section]) - field_names(config_type)
        if unknown:
            raise ConfigError(f'unknown settings {sorted(unknown)} in section [{section}] of {defaults}')

    if path is not None:
        try:
            with open(path, encoding='utf-8') as f:
                document = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f'cannot read experiment config {path}: {e}') from e
        if not isinstance(document, dict):
            raise ConfigError(f'{path} must hold a flat JSON object')
        _route(values, document, str(path))
    experiment = _assemble(values, parse_overrides(overrides), 'overrides')
    logger.debug('Experiment config: %s', experiment)
    return experiment

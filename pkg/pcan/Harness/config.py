# Defines the run configuration, its JSON loading and environment overrides
#
# Copyright (c) 2026, pcan developers and contributors


import dataclasses
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Optional, Tuple

from pcan.Inference.loss import LossWeights
from pcan.Network.model import ModelConfig
from pcan.PositionAware.pam import PamConfig
from pcan.PositionAware.prior_sources import DEFAULT_PRIOR_SOURCE, get_prior_source
from pcan.SynthData.detector import DetectorNoiseConfig
from pcan.SynthData.scene import SceneConfig
from pcan.Util.exceptions import ConfigurationError
from pcan.Util.util import read_json, canonical_json


__all__ = ['ENV_PREFIX', 'DataConfig', 'OptimConfig', 'AblationSwitches', 'RunConfig',
           'config_from_dict', 'config_to_dict', 'config_hash', 'apply_env_overrides',
           'load_config']


logger = logging.getLogger(__name__)


ENV_PREFIX = 'PCAN_'


@dataclass(frozen=True)
class DataConfig(object):
    """
    :param n_scenes: scenes generated in total, the last `scene.val_fraction`
     of them form the validation split
    :param seed: dataset seed, shared by every run of an ablation
    :param dataset_dir: directory written by `synth generate`; None generates
     the scenes in memory
    """
    n_scenes: int = 250
    seed: int = 0
    dataset_dir: Optional[str] = None
    scene: SceneConfig = field(default_factory=SceneConfig)
    detector: DetectorNoiseConfig = field(default_factory=DetectorNoiseConfig)


@dataclass(frozen=True)
class OptimConfig(object):
    """
    :param milestones: fractions of the epoch budget where the learning rate
     is multiplied by `decay`
    :param clip_norm: global gradient norm clipping, 0 disables it
    :param accumulate_steps: batches accumulated per optimizer update
    """
    learning_rate: float = 1e-4
    weight_decay: float = 5e-4
    milestones: Tuple[float, ...] = (2. / 3., 11. / 12.)
    decay: float = 0.1
    clip_norm: float = 0.1
    accumulate_steps: int = 1


@dataclass(frozen=True)
class AblationSwitches(object):
    """
    :param use_clum: run the contrastive decoder path during training
    :param use_pam: draw the contrastive boxes with the position-aware sampler;
     off, the groups hold the target plus unconstrained random boxes
    :param use_contrastive_loss: add the contrastive alignment loss
    :param prior_source: name of the prior source used when use_pam is on
    """
    use_clum: bool = True
    use_pam: bool = True
    use_contrastive_loss: bool = True
    prior_source: str = DEFAULT_PRIOR_SOURCE

    @property
    def effective_prior_source(self):
        return self.prior_source if self.use_pam else 'gt+unconstrained-random'


@dataclass(frozen=True)
class RunConfig(object):
    seed: int = 0
    epochs: int = 20
    batch_size: int = 4
    precision: str = 'float32'
    output_dir: str = 'runs/default'
    num_overlays: int = 8
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    pam: PamConfig = field(default_factory=PamConfig)
    loss: LossWeights = field(default_factory=LossWeights)
    optim: OptimConfig = field(default_factory=OptimConfig)
    ablation: AblationSwitches = field(default_factory=AblationSwitches)

    def validate(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigurationError("epochs must be >= 0 and batch_size >= 1")
        if self.precision not in ('float32', 'float64'):
            raise ConfigurationError(f"Precision '{self.precision}' is not supported")
        if self.data.n_scenes < 1:
            raise ConfigurationError("n_scenes must be at least 1")
        if self.optim.learning_rate <= 0 or self.optim.accumulate_steps < 1:
            raise ConfigurationError("learning_rate must be positive and accumulate_steps >= 1")
        if any(not 0. < m <= 1. for m in self.optim.milestones):
            raise ConfigurationError("Milestones are fractions of the epoch budget in (0, 1]")
        self.data.scene.validate()
        self.data.detector.validate()
        self.model.validate()
        self.pam.validate()
        self.loss.validate()
        get_prior_source(self.ablation.prior_source)
        if self.pam.group_size > self.model.num_queries:
            raise ConfigurationError(f"Groups of {self.pam.group_size} boxes exceed the "
                                     f"{self.model.num_queries} decoder queries")
        return self


def _coerce(value, default):
    if isinstance(default, tuple) and isinstance(value, list):
        return tuple(_coerce(v, default[0] if default else None) for v in value)
    if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


def _build(cls, d, where):
    if not isinstance(d, dict):
        raise ConfigurationError(f"Section '{where}' must be an object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(d) - set(fields))
    if unknown:
        raise ConfigurationError(f"Unknown keys in '{where}': {unknown}")
    defaults = cls()
    kwargs = {}
    for name, value in d.items():
        default = getattr(defaults, name)
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{where}.{name}" if where else name)
        else:
            kwargs[name] = _coerce(value, default)
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigurationError(f"Section '{where}': {e}") from None


def config_from_dict(d):
    """RunConfig from nested dictionaries; missing keys take their default."""
    return _build(RunConfig, d, '')


def config_to_dict(config):
    return json.loads(json.dumps(dataclasses.asdict(config)))


def config_hash(config):
    """sha256 of the canonical JSON encoding of the configuration."""
    return hashlib.sha256(canonical_json(config_to_dict(config)).encode()).hexdigest()


def _parse_env_value(text):
    try:
        return json.loads(text)
    except ValueError:
        return text


def apply_env_overrides(d, environ=None):
    """Override entries of a configuration dictionary from the environment.

    PCAN_SEED=3 sets d['seed']; PCAN_MODEL__HIDDEN_DIM=64 sets
    d['model']['hidden_dim']. Values are JSON literals, or plain strings.

    :return: new dictionary, `d` is left untouched
    """
    environ = os.environ if environ is None else environ
    out = json.loads(json.dumps(d))
    for key, text in sorted(environ.items()):
        if not key.startswith(ENV_PREFIX):
            continue
        path = key[len(ENV_PREFIX):].lower().split('__')
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigurationError(f"{key} descends into the non-section key '{part}'")
        node[path[-1]] = _parse_env_value(text)
        logger.info("configuration override %s=%s", key, text)
    return out


def load_config(path=None, environ=None):
    """Read a JSON configuration file (or defaults), then apply PCAN_ overrides.

    :return: validated RunConfig
    """
    d = read_json(path) if path is not None else {}
    return config_from_dict(apply_env_overrides(d, environ)).validate()

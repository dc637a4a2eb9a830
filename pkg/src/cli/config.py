import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from src.cli.constants import Commands, ConfigSections
from src.exceptions import ConfigError
from src.gmrf.hyperparams import FieldHyperparams
from src.model.priors import FieldPrior, PriorConfig
from src.sampler.config import ChainConfig
from src.synth.config import SynthConfig, TruthParameters
from src.utils.hashing import config_hash

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = Path(__file__).with_name('default_config.yaml')


@dataclass
class RunConfig:
    command: str = Commands.FIT
    mesh: Optional[str] = None
    observations: Optional[str] = None
    trace: Optional[str] = None
    out: str = 'out'
    threads: int = 1
    seed: Optional[int] = None
    snapshot: int = -1
    p_effective: Optional[int] = None
    profile_bins: int = 10
    synth: SynthConfig = field(default_factory=SynthConfig)
    priors: PriorConfig = field(default_factory=PriorConfig)
    chain: ChainConfig = field(default_factory=ChainConfig)

    def check(self) -> 'RunConfig':
        if self.command not in Commands.ALL:
            raise ConfigError(f'unknown command {self.command!r}')
        if self.command in (Commands.SIMULATE, Commands.FIT) and self.seed is None:
            raise ConfigError(f'{self.command} needs a seed (run.seed or --seed)')
        if not isinstance(self.threads, int) or self.threads < 1:
            raise ConfigError(f'run.threads must be a positive integer, got {self.threads!r}')
        required = {
            Commands.FIT: ('mesh', 'observations'),
            Commands.DIAGNOSE: ('mesh', 'observations'),
            Commands.VALIDATE_MESH: ('mesh',),
        }.get(self.command, ())
        for name in required:
            value = getattr(self, name)
            if value is None:
                raise ConfigError(f'{self.command} needs run.{name}')
            if not Path(value).is_file():
                raise ConfigError(f'run.{name} does not exist: {value}')
        self.chain.check()
        return self

    def model_payload(self) -> dict:
        """The parts of the config that determine a fit; hashed into every manifest."""
        return {
            'seed': self.seed,
            'priors': dataclasses.asdict(self.priors),
            'chain': {key: value for key, value in dataclasses.asdict(self.chain).items()
                      if key != 'progress'},
        }

    def hash(self) -> str:
        return config_hash(self.model_payload())


def _build(cls, section, name: str, nested: dict = None):
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError(f'section {name!r} must be a mapping')
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(section) - known)
    if unknown:
        raise ConfigError(f'unknown keys in {name!r}: {", ".join(unknown)}')
    kwargs = dict(section)
    for key, builder in (nested or {}).items():
        if key in kwargs:
            kwargs[key] = builder(kwargs[key], f'{name}.{key}')
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f'section {name!r}: {exc}') from exc


def _hyperparams(section, name):
    return _build(FieldHyperparams, section, name)


def _field_prior(section, name):
    return _build(FieldPrior, section, name)


def _truth(section, name):
    return _build(TruthParameters, section, name, {'hp_beta': _hyperparams, 'hp_gamma': _hyperparams})


def parse_config(payload: dict) -> RunConfig:
    payload = payload or {}
    if not isinstance(payload, dict):
        raise ConfigError('config must be a mapping of sections')
    unknown = sorted(set(payload) - set(ConfigSections.ALL))
    if unknown:
        raise ConfigError(f'unknown config sections: {", ".join(unknown)}')

    synth = _build(SynthConfig, payload.get(ConfigSections.SYNTH), ConfigSections.SYNTH, {'truth': _truth})
    priors = _build(PriorConfig, payload.get(ConfigSections.PRIORS), ConfigSections.PRIORS,
                    {'beta': _field_prior, 'gamma': _field_prior})
    chain = _build(ChainConfig, payload.get(ConfigSections.CHAIN), ConfigSections.CHAIN)
    run = payload.get(ConfigSections.RUN) or {}
    run_fields = {f.name for f in dataclasses.fields(RunConfig)} - {'command', *ConfigSections.ALL}
    unknown = sorted(set(run) - run_fields)
    if unknown:
        raise ConfigError(f'unknown keys in {ConfigSections.RUN!r}: {", ".join(unknown)}')
    return RunConfig(synth=synth, priors=priors, chain=chain, **run)


def load_config(path=None) -> RunConfig:
    """Reads a YAML run config; without a path, the shipped defaults."""
    path = DEFAULT_CONFIG if path is None else Path(path)
    if not path.is_file():
        raise ConfigError(f'config file not found: {path}')
    try:
        with open(path) as f:
            payload = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise ConfigError(f'{path}: invalid YAML: {exc}') from exc
    logger.debug(f'Loaded config from {path}')
    return parse_config(payload)

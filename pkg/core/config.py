import os
from dataclasses import dataclass, fields, replace
from typing import Optional

from django.conf import settings

from .exceptions import ConfigurationError


@dataclass(frozen=True)
class RunConfig:
    """Typed view of one engine run: settings defaults overridden by flags"""

    samples: int = 10000
    seed: int = 42
    block_size: int = 1024
    jobs: int = 0
    node_cap: int = 10_000_000
    variable_cap: int = 10_000
    expansion_cap: int = 1_000_000
    memo_cap: int = 1_000_000
    enumeration_cap: int = 2 ** 20
    validation_samples: int = 10000
    symbolic: bool = True

    @classmethod
    def from_settings(cls, **overrides) -> 'RunConfig':
        """Build from settings.DCPLP; overrides that are None are ignored"""
        values = {}
        configured = getattr(settings, 'DCPLP', {})
        for field in fields(cls):
            key = field.name.upper()
            if key in configured:
                values[field.name] = configured[key]
        values.update({k: v for k, v in overrides.items() if v is not None})
        unknown = set(values) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigurationError(f"Unknown configuration keys: {', '.join(sorted(unknown))}")
        config = cls(**values)
        config.validate()
        return config

    def validate(self):
        if self.samples < 1:
            raise ConfigurationError(f'samples must be at least 1, got {self.samples}')
        if self.seed < 0:
            raise ConfigurationError(f'seed must be non-negative, got {self.seed}')
        if self.block_size < 1:
            raise ConfigurationError(f'block size must be at least 1, got {self.block_size}')
        if self.jobs < 0:
            raise ConfigurationError(f'jobs must be non-negative, got {self.jobs}')
        for name in ('node_cap', 'variable_cap', 'expansion_cap', 'memo_cap',
                     'enumeration_cap', 'validation_samples'):
            if getattr(self, name) < 1:
                raise ConfigurationError(f'{name} must be positive, got {getattr(self, name)}')

    @property
    def workers(self) -> int:
        """Number of sampling worker processes (0 means all cores)"""
        return self.jobs or os.cpu_count() or 1

    def with_overrides(self, **overrides) -> 'RunConfig':
        config = replace(self, **{k: v for k, v in overrides.items() if v is not None})
        config.validate()
        return config

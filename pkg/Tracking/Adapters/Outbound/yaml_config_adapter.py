from __future__ import annotations

import logging

import yaml
from pydantic import ValidationError

from Tracking.Domain.errors import ConfigError
from Tracking.Domain.evaluation import SubsetSpec
from Tracking.Ports.Outbound.config_interface import ConfigSource

logger = logging.getLogger(__name__)


class YamlConfigAdapter(ConfigSource):
    def load(self, path: str) -> dict:
        with open(path, encoding="utf-8") as fh:
            try:
                data = yaml.safe_load(fh)
            except yaml.YAMLError as e:
                raise ConfigError(f"{path}: {e}") from e
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        logger.debug("loaded config %s (%s)", path, ", ".join(data))
        return data

    def load_subsets(self, path: str) -> list[SubsetSpec]:
        data = self.load(path)
        try:
            return [SubsetSpec.model_validate(s) for s in data.get("subsets", [])]
        except ValidationError as e:
            raise ConfigError(f"{path}: {e.errors()[0]['msg']}") from e

import os
import logging
from functools import lru_cache

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field


ENV_PREFIX = "GB_"


class Settings(BaseModel):
    """
    Bounds and caps shared by the exhaustive algorithms.

    Values are resolved from defaults, an optional YAML file named by ``GB_CONFIG`` and
    ``GB_*`` environment variables (a ``.env`` file is honoured). Command-line flags
    override the resolved values.

    Attributes:
        depth (int): Default exploration depth (firings, or observable steps for bisimulation).
        state_cap (int): Maximum number of states an exhaustive exploration may visit.
        search_cap (int): Maximum number of candidates a brute-force search may try.
        view_cap (int, optional): Local views longer than this are keyed as "long".
        tau_cap (int, optional): Internal moves allowed between two observable ones.
        progress (bool): Show tqdm progress bars on long enumerations.
        log_level (str): Logging level used by the command line.
    """
    depth: int = Field(8, ge=0)
    state_cap: int = Field(100_000, ge=1)
    search_cap: int = Field(200_000, ge=1)
    view_cap: int | None = Field(None, ge=0)
    tau_cap: int | None = Field(None, ge=0)
    progress: bool = False
    log_level: str = "INFO"


def _from_env() -> dict:
    values = {}
    for name in Settings.model_fields:
        raw = os.getenv(f"{ENV_PREFIX}{name.upper()}")
        if raw is not None and raw != "":
            values[name] = raw
    return values


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Resolve the settings once per process."""
    load_dotenv()
    values = {}
    config_path = os.getenv(f"{ENV_PREFIX}CONFIG")
    if config_path:
        with open(config_path, "r", encoding="utf-8") as handle:
            values.update(yaml.safe_load(handle) or {})
        logging.info(f"Loaded settings from {config_path}")
    values.update(_from_env())
    return Settings(**values)


def resolve(value, name: str):
    """Return ``value`` or, when it is None, the configured setting ``name``."""
    return getattr(get_settings(), name) if value is None else value

"""
Process-level settings read from the environment (and an optional .env file)
"""

import os
import logging
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

# Load environment variables
load_dotenv()

TOOL_VERSION = "1.0.0"
DEFAULT_OUTPUT_ROOT = "runs"
DEFAULT_SWEEP_CAP = 64
DEFAULT_BLOWUP_CEILING = 1e12


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True)

    output_root: Path
    workers: int = Field(ge=1)
    sweep_cap: int = Field(ge=1)
    log_level: str
    blowup_ceiling: float = Field(gt=0)


def _default_workers() -> int:
    return max(1, min(4, os.cpu_count() or 1))


def get_settings() -> Settings:
    """Read the settings; values are re-read on every call"""
    return Settings(
        output_root=Path(os.getenv("ODDWAVES_OUTPUT_ROOT", DEFAULT_OUTPUT_ROOT)),
        workers=int(os.getenv("ODDWAVES_WORKERS", _default_workers())),
        sweep_cap=int(os.getenv("ODDWAVES_SWEEP_CAP", DEFAULT_SWEEP_CAP)),
        log_level=os.getenv("ODDWAVES_LOG_LEVEL", "INFO").upper(),
        blowup_ceiling=float(os.getenv("ODDWAVES_BLOWUP_CEILING", DEFAULT_BLOWUP_CEILING)),
    )


def setup_logging(level: str = "INFO") -> None:
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

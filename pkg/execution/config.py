"""
config.py — Run configuration for uipt-lab.

Precedence is CLI flag > environment variable > default. The environment is
seeded from an optional .env at the repository root (see .env.example).

Usage (as module):
    from execution.config import RunConfig, load_env
    load_env()
    cfg = RunConfig.resolve("law hull-gf", {"r": 3, "s": 0.9}, seed=None)
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from dotenv import load_dotenv

from execution.errors import require

ROOT = Path(__file__).parent.parent

# ─── Defaults ─────────────────────────────────────────────────────────────────
DEFAULT_SEED = 42
DEFAULT_TRIALS = 10_000
DEFAULT_WORKERS = 1
DEFAULT_PRECISION = "float"
DEFAULT_FORMAT = "json"
DEFAULT_TAIL_EPS = 1e-9
DEFAULT_MP_DPS = 30
DEFAULT_SLOT_HARD_LIMIT = 1 << 22

PRECISIONS = ("exact", "float")
FORMATS = ("json", "csv")


def load_env() -> None:
    """Load ROOT/.env without overriding variables already exported."""
    load_dotenv(ROOT / ".env", override=False)


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    return int(raw) if raw not in (None, "") else default


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    return float(raw) if raw not in (None, "") else default


def _env_str(name: str, default: str) -> str:
    raw = os.getenv(name)
    return raw if raw not in (None, "") else default


def cache_dir() -> Path | None:
    raw = os.getenv("UIPT_LAB_CACHE_DIR")
    return Path(raw) if raw else None


def mp_dps() -> int:
    return _env_int("UIPT_LAB_MP_DPS", DEFAULT_MP_DPS)


def slot_hard_limit() -> int:
    return _env_int("UIPT_LAB_SLOT_HARD_LIMIT", DEFAULT_SLOT_HARD_LIMIT)


# ─── Run configuration ────────────────────────────────────────────────────────
@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    precision: str = DEFAULT_PRECISION
    seed: int = DEFAULT_SEED
    trials: int = DEFAULT_TRIALS
    workers: int = DEFAULT_WORKERS
    output_format: str = DEFAULT_FORMAT
    tail_eps: float = DEFAULT_TAIL_EPS

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def resolve(
        cls,
        command: str,
        params: dict,
        *,
        precision: str | None = None,
        seed: int | None = None,
        trials: int | None = None,
        workers: int | None = None,
        output_format: str | None = None,
        tail_eps: float | None = None,
    ) -> "RunConfig":
        cfg = cls(
            command=command,
            params=dict(params),
            precision=precision or _env_str("UIPT_LAB_PRECISION", DEFAULT_PRECISION),
            seed=seed if seed is not None else _env_int("UIPT_LAB_SEED", DEFAULT_SEED),
            trials=trials if trials is not None else _env_int("UIPT_LAB_TRIALS", DEFAULT_TRIALS),
            workers=workers if workers is not None else _env_int("UIPT_LAB_WORKERS", DEFAULT_WORKERS),
            output_format=output_format or _env_str("UIPT_LAB_FORMAT", DEFAULT_FORMAT),
            tail_eps=tail_eps if tail_eps is not None else _env_float("UIPT_LAB_TAIL_EPS", DEFAULT_TAIL_EPS),
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        require(self.precision in PRECISIONS, f"precision must be one of {PRECISIONS}, got {self.precision!r}")
        require(self.output_format in FORMATS, f"format must be one of {FORMATS}, got {self.output_format!r}")
        require(self.trials >= 1, f"trials must be >= 1, got {self.trials}")
        require(self.workers >= 1, f"workers must be >= 1, got {self.workers}")
        require(0 < self.tail_eps < 1, f"tail-eps must lie in (0,1), got {self.tail_eps}")
        require(0 <= self.seed < 2**64, f"seed must be a 64-bit nonnegative integer, got {self.seed}")

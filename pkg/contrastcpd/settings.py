# contrastcpd/settings.py
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

env_path = Path(__file__).resolve().parents[1] / "config" / ".env"
if env_path.exists():
    load_dotenv(env_path.as_posix(), override=True, encoding="utf-8-sig")


def _env_int(name: str, default: int, minimum: Optional[int] = None) -> int:
    try:
        value = int(os.getenv(name, "").strip() or default)
    except Exception:
        return default
    if minimum is not None and value < minimum:
        return default
    return value


def _env_str(name: str, default: str) -> str:
    return (os.getenv(name, "") or "").strip() or default


# ---------- defaults (can be overridden by env at runtime) ----------
WORKERS = _env_int("CPD_WORKERS", 1, minimum=1)
FIT_WORKERS = _env_int("CPD_FIT_WORKERS", 1, minimum=1)
DEFAULT_SEED = _env_int("CPD_SEED", 7)
LOG_LEVEL = _env_str("CPD_LOG_LEVEL", "INFO").upper()


def describe() -> str:
    return (
        f"WORKERS={WORKERS} FIT_WORKERS={FIT_WORKERS} SEED={DEFAULT_SEED} "
        f"LOG_LEVEL={LOG_LEVEL} env_file={'yes' if env_path.exists() else 'no'}"
    )

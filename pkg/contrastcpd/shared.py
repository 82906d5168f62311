# contrastcpd/shared.py
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, TypeVar

import numpy as np
from jinja2 import Environment, FileSystemLoader, StrictUndefined

# Pydantic
from pydantic import BaseModel, Field, root_validator, validator

# Where templates live
PACKAGE_ROOT = Path(__file__).resolve().parent
TEMPLATES_DIR = PACKAGE_ROOT / "templates"

# Single Jinja2 environment shared across report renderers
templates = Environment(
    loader=FileSystemLoader(str(TEMPLATES_DIR)),
    undefined=StrictUndefined,
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Map `fn` over `items`, optionally on a thread pool; output order follows input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def derive_rng(*keys: int) -> np.random.Generator:
    """Counter-based generator keyed on an integer tuple, e.g. (seed, rep) or (seed, tau, t)."""
    seq = np.random.SeedSequence([int(k) & 0xFFFFFFFF for k in keys])
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(*keys: int) -> int:
    seq = np.random.SeedSequence([int(k) & 0xFFFFFFFF for k in keys])
    return int(seq.generate_state(1, dtype=np.uint32)[0])


# Re-export for convenience
__all__ = [
    "BaseModel",
    "Field",
    "root_validator",
    "validator",
    "templates",
    "ordered_map",
    "derive_rng",
    "derive_seed",
]

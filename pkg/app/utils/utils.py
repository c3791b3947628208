"""General helper utilities."""
from __future__ import annotations
from fractions import Fraction
from pathlib import Path
from typing import Any
import json
import math
import os

def ensure_dir(path: str | Path) -> Path:
    """Ensure a directory exists and return it as a Path."""
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p

def write_text(path: str | Path, text: str) -> None:
    """Write a text file (utf-8) to disk atomically."""
    atomic_write_bytes(path, text.encode("utf-8"))

def write_json(path: str | Path, obj: Any) -> None:
    """Write JSON to disk (pretty)."""
    write_text(path, json.dumps(obj, indent=2, ensure_ascii=False) + "\n")

def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    """Atomically write bytes to disk to avoid partial files."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    tmp = p.with_suffix(p.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, p)

def round_half_away(x: float, eps: float = 1e-9) -> int:
    """Round to the nearest integer, ties (within eps) away from zero."""
    return int(math.copysign(math.floor(abs(x) + 0.5 + eps), x))

def format_fraction(value: Fraction) -> str:
    """Render an exact rational as 'p/q (decimal)'."""
    if value.denominator == 1:
        return f"{value.numerator} ({float(value):.6f})"
    return f"{value.numerator}/{value.denominator} ({float(value):.6f})"

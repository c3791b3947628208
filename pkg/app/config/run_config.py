"""Per-invocation options merged over Settings."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from app.config.settings import Settings
from app.exceptions.custom_exceptions import ConfigurationError

FORMATS = {
    "topology": ("json", "dot"),
    "margin": ("json", "csv"),
    "program": ("json", "csv"),
}

@dataclass(frozen=True)
class RunConfig:
    """Validated options for one command."""
    command: str
    n: int = 8
    m: int = 4
    k: int | None = None
    seed: int = 1
    sweeps: int = 1000
    restarts: int = 16
    out: Path | None = None
    fmt: str = "json"

    @staticmethod
    def from_options(settings: Settings, command: str, **options) -> "RunConfig":
        """Fill unset options from settings, then validate."""
        config = RunConfig(
            command=command,
            n=options.get("n") if options.get("n") is not None else 8,
            m=options.get("m") if options.get("m") is not None else 4,
            k=options.get("k"),
            seed=options.get("seed") if options.get("seed") is not None else settings.default_seed,
            sweeps=options.get("sweeps") if options.get("sweeps") is not None else settings.anneal_sweeps,
            restarts=options.get("restarts") if options.get("restarts") is not None else settings.anneal_restarts,
            out=Path(options["out"]) if options.get("out") else None,
            fmt=options.get("fmt") or "json",
        )
        config.validate()
        return config

    def validate(self) -> None:
        for name in ("n", "m", "sweeps", "restarts"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"--{name} must be >= 1, got {getattr(self, name)}")
        if self.k is not None and self.k < 1:
            raise ConfigurationError(f"--k must be >= 1, got {self.k}")
        allowed = FORMATS.get(self.command, ("json",))
        if self.fmt not in allowed:
            raise ConfigurationError(f"--format {self.fmt} is not available for {self.command} (use {', '.join(allowed)})")

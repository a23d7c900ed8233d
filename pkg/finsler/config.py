"""
Configuration management for the toolkit
"""
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict


class Tolerances(BaseModel):
    """Numerical tolerances shared by every check and probe"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    fd_step: float = Field(1e-4, gt=0, description="Central finite-difference step")
    cartan_step: float = Field(1e-4, gt=0, description="Step for y-derivatives of the fundamental tensor")
    derivative: float = Field(1e-6, gt=0, description="Derivative-based probes")
    algebraic: float = Field(1e-9, gt=0, description="Algebraic identities")
    homogeneity: float = Field(1e-9, gt=0, description="F(x,cy) = cF(x,y), relative")
    euler: float = Field(1e-9, gt=0, description="g(y,y) = F^2, relative")
    domain_margin: float = Field(1e-6, ge=0, description="Distance kept from chart boundaries")
    singular_pivot: float = Field(1e-12, gt=0, description="Relative pivot size for singularity")
    tiny: float = Field(1e-300, gt=0, description="Smallest admissible sqrt/log/division argument")
    gradient_zero: float = Field(1e-12, ge=0, description="Scalar field gradient treated as zero")
    bridge: float = Field(1e-6, gt=0, description="Symmetrized block vs autodiff tensor")

    def updated(self, overrides: Mapping[str, float]) -> "Tolerances":
        """Return a copy with the given fields replaced"""
        unknown = sorted(set(overrides) - set(type(self).model_fields))
        if unknown:
            raise ValueError(f"unknown tolerance name(s): {', '.join(unknown)}")
        return type(self).model_validate({**self.model_dump(), **overrides})


DEFAULT_TOLERANCES = Tolerances()


class Settings(BaseSettings):
    """Settings loaded from environment variables (prefix FINSLER_)"""
    model_config = SettingsConfigDict(
        env_prefix="FINSLER_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = None

    # Sample processing
    workers: int = Field(1, ge=1)
    progress: bool = False
    default_samples: int = Field(200, gt=0)
    default_seed: int = Field(0, ge=0)

    # Metric specs
    max_spec_depth: int = Field(4, ge=1)

    # CI loosening, e.g. FINSLER_TOL_OVERRIDE="derivative=1e-5,euler=1e-8"
    tol_override: str = ""

    @property
    def base_dir(self) -> Path:
        """Get base directory of the project"""
        return Path(__file__).parent.parent

    @property
    def log_path(self) -> Optional[Path]:
        """Get log file path, creating its directory"""
        if not self.log_file:
            return None
        path = Path(self.log_file)
        if not path.is_absolute():
            path = self.base_dir / path
        path.parent.mkdir(parents=True, exist_ok=True)
        return path


def parse_tolerance_pairs(pairs: Iterable[str]) -> Dict[str, float]:
    """Parse 'name=value' items (each item may itself be comma separated)"""
    parsed: Dict[str, float] = {}
    for item in pairs:
        for part in item.split(","):
            part = part.strip()
            if not part:
                continue
            name, sep, value = part.partition("=")
            if not sep:
                raise ValueError(f"tolerance override '{part}' is not of the form name=value")
            try:
                parsed[name.strip()] = float(value)
            except ValueError:
                raise ValueError(f"tolerance override '{part}' has a non-numeric value") from None
    return parsed


def resolve_tolerances(
    config_overrides: Optional[Mapping[str, float]] = None,
    cli_overrides: Iterable[str] = (),
    env_override: Optional[str] = None,
) -> Tolerances:
    """
    Build the tolerance record for a run

    Later sources win: defaults, config file, FINSLER_TOL_OVERRIDE, --tol flags.
    """
    if env_override is None:
        env_override = get_settings().tol_override
    tol = DEFAULT_TOLERANCES
    try:
        if config_overrides:
            tol = tol.updated(dict(config_overrides))
        if env_override:
            tol = tol.updated(parse_tolerance_pairs([env_override]))
        cli = parse_tolerance_pairs(cli_overrides)
        if cli:
            tol = tol.updated(cli)
    except ValidationError as e:
        raise ValueError(f"invalid tolerance value: {e.errors()[0]['msg']}") from None
    return tol


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()


# Global settings instance
settings = get_settings()

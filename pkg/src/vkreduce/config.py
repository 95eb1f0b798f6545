"""Beam configuration and the key=value config file format."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

BOUNDARY_CONDITIONS = ("pinned-pinned", "clamped-clamped")


class ConfigError(ValueError):
    """Raised for invalid configuration values or unparseable config files."""


@dataclass(frozen=True)
class ForcingSpec:
    """Uniform distributed load with time factor ``sin(omega * tau)``.

    ``omega`` is the nondimensional forcing frequency. ``None`` means "use
    the first undamped frequency of the assembled beam".
    """

    omega: float | None = None
    profile: str = "uniform"

    def __post_init__(self):
        if self.omega is not None and not self.omega > 0:
            raise ConfigError(f"forcing frequency must be positive, got {self.omega}")
        if self.profile not in ("uniform", "none"):
            raise ConfigError(f"unknown load profile {self.profile!r}")


@dataclass(frozen=True)
class BeamConfig:
    """Physical and discretization parameters of the beam.

    Physical values are SI. ``zeta`` may be given directly; otherwise it is
    derived from the material data as ``kappa / (L * sqrt(rho * E_mod))``.
    """

    L: float = 1.0
    eps: float = 1e-3
    E_mod: float = 70e9
    rho: float = 2700.0
    kappa: float | None = 1e8
    zeta: float | None = None
    alpha: float = 1.0
    beta: float = 1.0
    n_elements: int = 20
    bc: str = "pinned-pinned"
    forcing: ForcingSpec = field(default_factory=ForcingSpec)

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if int(self.n_elements) != self.n_elements or self.n_elements < 2:
            raise ConfigError(f"n_elements must be an integer >= 2, got {self.n_elements}")
        for name in ("L", "E_mod", "rho"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.zeta is None:
            if self.kappa is None:
                raise ConfigError("either zeta or kappa must be given")
            if not self.kappa > 0:
                raise ConfigError(f"kappa must be positive, got {self.kappa}")
        elif self.zeta < 0:
            raise ConfigError(f"zeta must be non-negative, got {self.zeta}")
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ConfigError(f"bc must be one of {BOUNDARY_CONDITIONS}, got {self.bc!r}")

    @property
    def zeta_value(self) -> float:
        if self.zeta is not None:
            return float(self.zeta)
        return derived_zeta(self.kappa, self.L, self.rho, self.E_mod)

    @property
    def thickness(self) -> float:
        return self.eps * self.L

    @property
    def time_scale(self) -> float:
        """Physical seconds per unit of nondimensional time."""
        return self.L / self.eps * math.sqrt(self.rho / self.E_mod)

    def replace(self, **changes) -> "BeamConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["zeta_value"] = self.zeta_value
        return d


def derived_zeta(kappa: float, L: float, rho: float, E_mod: float) -> float:
    return kappa / (L * math.sqrt(rho * E_mod))


_FLOAT_KEYS = {"L", "eps", "E_mod", "rho", "kappa", "zeta", "alpha", "beta", "omega"}
_INT_KEYS = {"n_elements"}
_STR_KEYS = {"bc", "profile"}
REQUIRED_KEYS = ("L", "eps", "E_mod", "rho", "n_elements")


def parse_config_text(text: str, source: str = "<config>") -> BeamConfig:
    """Parse the flat ``key = value`` format (``#`` starts a comment).

    Keys mirror :class:`BeamConfig` fields; ``omega`` and ``profile`` fill the
    forcing description.
    """
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            if key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key in _INT_KEYS:
                values[key] = int(value)
            elif key in _STR_KEYS:
                values[key] = value
            else:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {value!r}") from None

    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError(f"{source}: missing required key(s): {', '.join(missing)}")
    if "zeta" not in values and "kappa" not in values:
        raise ConfigError(f"{source}: missing required key: kappa (or zeta)")

    forcing = ForcingSpec(
        omega=values.pop("omega", None),
        profile=values.pop("profile", "uniform"),
    )
    values.setdefault("kappa", None)
    return BeamConfig(forcing=forcing, **values)


def load_config(path: str | Path) -> BeamConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, source=str(path))


def format_config(config: BeamConfig) -> str:
    lines = [
        f"L = {config.L!r}",
        f"eps = {config.eps!r}",
        f"E_mod = {config.E_mod!r}",
        f"rho = {config.rho!r}",
    ]
    if config.kappa is not None:
        lines.append(f"kappa = {config.kappa!r}")
    if config.zeta is not None:
        lines.append(f"zeta = {config.zeta!r}")
    lines += [
        f"alpha = {config.alpha!r}",
        f"beta = {config.beta!r}",
        f"n_elements = {config.n_elements}",
        f"bc = {config.bc}",
        f"profile = {config.forcing.profile}",
    ]
    if config.forcing.omega is not None:
        lines.append(f"omega = {config.forcing.omega!r}")
    return "\n".join(lines) + "\n"

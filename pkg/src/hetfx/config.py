"""Resolved run configuration shared by the library, harness and CLI."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Any

from .bootstrap.multiplier import MultiplierSpec
from .errors import InvalidConfig
from .kernel import KernelSpec
from .ks_continuous import INFLUENCE_FORMS, PHI_SIGNS, PSI_FORMS

BRANCHES = ("auto", "discrete", "continuous")
BOOTSTRAP_POINTS = ("matched", "grid")
DEFAULT_ALPHAS = (0.01, 0.05, 0.10)


@dataclass(frozen=True)
class RunConfig:
    branch: str = "auto"
    grid_w: int = 100
    grid_x: int = 100
    kernel: KernelSpec = field(default_factory=KernelSpec)
    multiplier: MultiplierSpec = field(default_factory=MultiplierSpec)
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    relevance_tol: float = 0.01
    q_floor: float = 1e-8
    bootstrap_points: str = "matched"
    continuous_influence: str = "projection"
    phi_sign: str = "population"
    psi_form: str = "consistent"
    kappa_truncate: bool = False
    density_bandwidth: float | None = None
    exact_kinks_max_n: int = 5000
    threads: int | None = None

    def __post_init__(self):
        if self.branch not in BRANCHES:
            raise InvalidConfig(f"branch must be one of {BRANCHES}")
        if self.grid_w < 2 or self.grid_x < 2:
            raise InvalidConfig("grid sizes must be at least 2")
        alphas = tuple(sorted({float(a) for a in self.alphas}))
        if not alphas or any(not (0.0 < a < 1.0) for a in alphas):
            raise InvalidConfig("alphas must lie in (0, 1)")
        object.__setattr__(self, "alphas", alphas)
        if not self.relevance_tol > 0 or not self.q_floor > 0:
            raise InvalidConfig("relevance_tol and q_floor must be positive")
        if self.bootstrap_points not in BOOTSTRAP_POINTS:
            raise InvalidConfig(f"bootstrap_points must be one of {BOOTSTRAP_POINTS}")
        if self.continuous_influence not in INFLUENCE_FORMS:
            raise InvalidConfig(f"continuous_influence must be one of {INFLUENCE_FORMS}")
        if self.phi_sign not in PHI_SIGNS:
            raise InvalidConfig(f"phi_sign must be one of {PHI_SIGNS}")
        if self.psi_form not in PSI_FORMS:
            raise InvalidConfig(f"psi_form must be one of {PSI_FORMS}")
        if self.density_bandwidth is not None and not self.density_bandwidth > 0:
            raise InvalidConfig("density_bandwidth must be positive")

    @property
    def seed(self) -> int:
        return self.multiplier.seed

    @property
    def report_alphas(self) -> tuple[float, ...]:
        return tuple(sorted(set(DEFAULT_ALPHAS) | set(self.alphas)))

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, multiplier=replace(self.multiplier, seed=int(seed)))

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["alphas"] = list(self.alphas)
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        data = dict(data)
        if isinstance(data.get("kernel"), dict):
            data["kernel"] = KernelSpec(**data["kernel"])
        if isinstance(data.get("multiplier"), dict):
            data["multiplier"] = MultiplierSpec(**data["multiplier"])
        if "alphas" in data:
            data["alphas"] = tuple(data["alphas"])
        return cls(**data)

from __future__ import annotations

from .multiplier import (
    BootstrapDraws,
    MultiplierSpec,
    bootstrap_draws,
    critical_value,
    draw_multipliers,
    p_value,
    simulate_sup,
)

__all__ = [
    "BootstrapDraws",
    "MultiplierSpec",
    "bootstrap_draws",
    "critical_value",
    "draw_multipliers",
    "p_value",
    "simulate_sup",
]

"""Leader-follower LQ game with partial observation: Riccati solver and Monte Carlo harness."""

from ._core import (
    ConfigError,
    Error,
    HardViolation,
    InvalidParameter,
    RiccatiBlowUp,
    SpecialCaseInapplicable,
    advertising_param_names,
    offline,
    offline_config,
    run_cli,
    simulate,
    special_case_gap,
    verify,
)

__all__ = [
    "ConfigError",
    "Error",
    "HardViolation",
    "InvalidParameter",
    "RiccatiBlowUp",
    "SpecialCaseInapplicable",
    "advertising_param_names",
    "offline",
    "offline_config",
    "run_cli",
    "simulate",
    "special_case_gap",
    "verify",
]

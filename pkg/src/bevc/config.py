"""Tolerances, search settings and seeds shared by every module.

No threshold is hard-coded at a call site; functions take one of these
configs (or fall back to the module-level defaults below).
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

DEFAULT_SEED = 20000415
SEED_ENV_VAR = "BEVC_SEED"


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return DEFAULT_SEED
    seed = int(raw, 0)
    if not 0 <= seed < 2**64:
        raise ValueError(f"{SEED_ENV_VAR} must be a 64-bit unsigned integer, got {raw!r}")
    return seed


@dataclass(frozen=True)
class SearchConfig:
    """Settings of the multistart alternating product-state minimizer."""

    restarts: int = 64
    max_iters: int = 500
    eps_conv: float = 1e-14
    seed: int = field(default_factory=default_seed)
    # eigenvalues within this distance of the minimum count as degenerate
    degeneracy_tol: float = 1e-12
    # slack allowed in the per-sweep monotonicity assertion
    monotone_slack: float = 1e-13

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.eps_conv <= 0:
            raise ValueError("eps_conv must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class TruncationConfig:
    """Numerical thresholds plus the search settings used for certification."""

    herm_tol: float = 1e-12
    trace_tol: float = 1e-12
    rank_tol: float = 1e-12
    range_tol: float = 1e-10
    ppt_tol: float = 1e-10
    projector_tol: float = 1e-8
    entangle_margin: float = 1e-6
    # smallest epsilon accepted when building a witness
    epsilon_floor: float = 1e-10
    # witness epsilon is this fraction of the optimizer minimum
    epsilon_safety: float = 0.9
    # precondition the range search with the local filter normal form
    balance: bool = True
    balance_iters: int = 500
    balance_tol: float = 1e-13
    search: SearchConfig = field(default_factory=SearchConfig)

    def __post_init__(self):
        for name in ("herm_tol", "trace_tol", "rank_tol", "range_tol", "ppt_tol",
                     "projector_tol", "entangle_margin", "epsilon_floor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.epsilon_safety <= 1:
            raise ValueError("epsilon_safety must lie in (0, 1]")

    def with_search(self, **kwargs) -> "TruncationConfig":
        return replace(self, search=replace(self.search, **kwargs))


DEFAULT = TruncationConfig()

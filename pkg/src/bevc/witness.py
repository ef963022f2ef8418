"""Entanglement witnesses from kernel projectors and the positive maps they induce."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, TruncationConfig
from .criteria import check_projector, minimize_product_expectation
from .errors import BevcError, DimensionError
from .hilbert import DensityOperator, range_projector
from .sampling import random_product_vectors, random_unit_vectors


class WitnessError(BevcError, ValueError):
    pass


@dataclass(frozen=True)
class EpsilonResult:
    value: float
    flagged: bool
    restarts: int
    iterations_used: int


def epsilon_min(Q: DensityOperator, cfg: TruncationConfig = DEFAULT) -> EpsilonResult:
    """Smallest ``<phi chi|Q|phi chi>`` found by the multistart product search.

    Values below ``cfg.epsilon_floor`` come back as a flagged zero: the
    complement of ``Q`` then (numerically) holds a product vector.
    """
    check_projector(Q, cfg.projector_tol)
    res = minimize_product_expectation(Q.matrix, Q.dims, cfg.search)
    value = res.residual
    flagged = value < cfg.epsilon_floor
    return EpsilonResult(0.0 if flagged else value, flagged, res.restarts, res.iterations_used)


@dataclass(frozen=True)
class Witness:
    """``W = Q - epsilon * I`` with ``Q`` the kernel projector of the source state."""

    W: DensityOperator
    epsilon: float
    epsilon_found: float
    kernel_rank: int
    source_id: str
    optimizer_stats: dict

    @property
    def dims(self):
        return self.W.dims

    def expectation(self, v) -> float:
        return self.W.expectation(v)

    def summary(self, state: DensityOperator | None = None) -> dict:
        out = {
            "epsilon_used": self.epsilon,
            "epsilon_found": self.epsilon_found,
            "kernel_rank": self.kernel_rank,
            "source_id": self.source_id,
            **self.optimizer_stats,
        }
        if state is not None:
            out["trace_W_state"] = float(np.trace(self.W.matrix @ state.matrix).real)
        return out


def build_witness(state: DensityOperator, cfg: TruncationConfig = DEFAULT,
                  source_id: str = "") -> Witness:
    """Witness detecting ``state``, which must have no product vector in its range.

    ``Tr(W state) = -epsilon`` because ``Q`` annihilates the range of the
    state. The published epsilon is ``cfg.epsilon_safety`` times the optimizer
    minimum, which keeps ``W`` nonnegative on product states even if the
    search slightly overshot the true minimum.
    """
    P = range_projector(state, cfg.range_tol)
    Q = DensityOperator(np.eye(state.dim) - P.matrix, state.dims)
    eps = epsilon_min(Q, cfg)
    if eps.flagged:
        raise WitnessError("kernel projector has (numerically) zero product overlap; "
                           "the state's range contains a product vector")
    used = cfg.epsilon_safety * eps.value
    W = DensityOperator(Q.matrix - used * np.eye(state.dim), state.dims)
    return Witness(W, used, eps.value, state.dim - int(P.meta["rank"]),
                   source_id or str(state.meta.get("kind", "")),
                   {"restarts": eps.restarts, "iterations_used": eps.iterations_used,
                    "seed": cfg.search.seed})


def sample_product_minimum(w: Witness, n_samples: int, seed: int) -> float:
    """Minimum of ``<v|W|v>`` over seeded random product vectors."""
    rng = np.random.default_rng(seed)
    v = random_product_vectors(rng, n_samples, w.dims)
    return float(np.min(np.einsum("ri,ij,rj->r", v.conj(), w.W.matrix, v).real))


@dataclass(frozen=True)
class InducedMap:
    """``X -> Tr_A[W (X^T (x) I)]``, from side-A operators to side-B operators."""

    witness: Witness

    def __post_init__(self):
        w = self.witness
        if not w.epsilon > 0:
            raise WitnessError("witness epsilon must be positive")
        Q = DensityOperator(w.W.matrix + w.epsilon * np.eye(w.W.dim), w.W.dims)
        check_projector(Q)
        if np.trace(Q.matrix).real < 0.5:
            raise WitnessError("W + epsilon I must be a nonzero projector")

    @property
    def dims(self):
        return self.witness.dims

    def apply(self, X) -> np.ndarray:
        d_a, d_b = self.dims
        X = np.asarray(X, dtype=complex)
        if X.shape != (d_a, d_a):
            raise DimensionError(f"input must be {d_a}x{d_a}, got {X.shape}")
        t = self.witness.W.tensor()
        # Tr_A[W (X^T (x) I)]_{mu nu} = sum_{ij} W[i mu, j nu] X[i, j]
        return np.einsum("imjn,ij->mn", t, X)

    def choi_matrix(self) -> np.ndarray:
        """``sum_ij |i><j| (x) Λ(|i><j|)``; coincides with ``W`` in this convention."""
        d_a, d_b = self.dims
        out = np.zeros((d_a, d_b, d_a, d_b), dtype=complex)
        for i in range(d_a):
            for j in range(d_a):
                e = np.zeros((d_a, d_a))
                e[i, j] = 1.0
                out[i, :, j, :] = self.apply(e)
        return out.reshape(d_a * d_b, d_a * d_b)


def witness_from_choi(choi: np.ndarray, dims) -> np.ndarray:
    """Inverse of ``InducedMap.choi_matrix``: the identity reshuffling."""
    d_a, d_b = dims
    return np.asarray(choi).reshape(d_a, d_b, d_a, d_b).reshape(d_a * d_b, d_a * d_b).copy()


def sample_map_positivity(lam: InducedMap, n_samples: int, seed: int) -> float:
    """Minimum eigenvalue of ``Λ(|u><u|)`` over seeded random pure inputs."""
    rng = np.random.default_rng(seed)
    u = random_unit_vectors(rng, n_samples, lam.dims[0])
    t = lam.witness.W.tensor()
    outs = np.einsum("imjn,ri,rj->rmn", t, u, u.conj())
    return float(np.min(np.linalg.eigvalsh(outs)))

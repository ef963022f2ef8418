"""Truncated Fock-space model of the optical preparation of ρ.

Occupations run ``0..N-1`` per mode and are stored at index ``n`` (hilbert
label ``n + 1``). The state labels of the direct construction start at 1, and
the bridge is the identity on occupations: level ``n`` is occupation ``n``.
Dropping occupation 0 on both modes therefore turns an ``N``-level Fock
operator into one on direct-construction levels ``1..N-1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import DimensionError
from .hilbert import DensityOperator, PureVector, project_local
from .states import CVParams, build_rho


@dataclass(frozen=True)
class ModeOps:
    """Ladder operators of two modes A and B, embedded in the two-mode space."""

    N: int
    a_lower: np.ndarray = field(init=False, repr=False)
    a_raise: np.ndarray = field(init=False, repr=False)
    b_lower: np.ndarray = field(init=False, repr=False)
    b_raise: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        low = single_mode_lower(self.N)
        eye = np.eye(self.N)
        object.__setattr__(self, "a_lower", np.kron(low, eye))
        object.__setattr__(self, "a_raise", np.kron(low.T, eye))
        object.__setattr__(self, "b_lower", np.kron(eye, low))
        object.__setattr__(self, "b_raise", np.kron(eye, low.T))

    @property
    def n_a(self) -> np.ndarray:
        return self.a_raise @ self.a_lower

    @property
    def n_b(self) -> np.ndarray:
        return self.b_raise @ self.b_lower


def single_mode_lower(N: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, N, dtype=float)), k=1)


def occupations(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Occupation numbers ``(n_A, n_B)`` of every flat two-mode index."""
    n = np.arange(N)
    return np.repeat(n, N), np.tile(n, N)


def swap_operator(N: int) -> np.ndarray:
    """``U |n, m> = |m, n>``."""
    n_a, n_b = occupations(N)
    U = np.zeros((N * N, N * N))
    U[n_b * N + n_a, n_a * N + n_b] = 1.0
    return U


@dataclass(frozen=True)
class ProtocolParams:
    beta: float
    gamma: float
    k_max: int
    levels: int = 1
    phases: tuple | None = None

    def __post_init__(self):
        if not 0 < self.gamma < self.beta:
            raise ValueError(f"need 0 < gamma < beta, got beta={self.beta}, gamma={self.gamma}")
        if self.k_max < 0:
            raise ValueError("k_max must be >= 0")
        if self.levels < 1:
            raise ValueError("ancilla levels must be >= 1")
        if self.phases is not None:
            ph = tuple(float(x) for x in self.phases)
            if len(ph) != self.levels or not all(math.isfinite(x) for x in ph):
                raise ValueError("need one finite phase per ancilla level")
            object.__setattr__(self, "phases", ph)

    @property
    def a(self) -> float:
        return math.exp(-self.beta)

    @property
    def c(self) -> float:
        return math.exp(-self.gamma)

    def kerr_phases(self) -> np.ndarray:
        return np.asarray(self.phases) if self.phases is not None else uniform_phases(self.levels)


def build_squeezed(lam: float, N: int) -> PureVector:
    """``exp(lam A^dag B^dag) |0,0>``, i.e. ``sum_n lam^n |n, n>`` below the cutoff."""
    if abs(lam) >= 1:
        raise ValueError(f"|lambda| must be < 1, got {lam}")
    if N < 1:
        raise ValueError("N must be >= 1")
    ops = ModeOps(N)
    vac = np.zeros(N * N)
    vac[0] = 1.0
    return PureVector(expm(lam * ops.a_raise @ ops.b_raise) @ vac, (N, N))


def delta_k(k: int, N: int) -> np.ndarray:
    """Projector onto occupations with ``n_B - n_A = k``."""
    if not 0 <= k < N:
        raise ValueError(f"k must lie in 0..{N - 1}, got {k}")
    n_a, n_b = occupations(N)
    return np.diag((n_b - n_a == k).astype(float))


def build_V(p: ProtocolParams, N: int) -> np.ndarray:
    """``exp(-beta n_A - gamma n_B) + U exp(-(beta - gamma) n_B)``."""
    n_a, n_b = occupations(N)
    first = np.diag(np.exp(-p.beta * n_a - p.gamma * n_b))
    second = swap_operator(N) @ np.diag(np.exp(-(p.beta - p.gamma) * n_b))
    return first + second


def protocol_terms(p: ProtocolParams, N: int) -> list[np.ndarray]:
    """``V delta_k V^dag`` for ``k = 1..k_max``."""
    if p.k_max > N - 1:
        raise DimensionError(f"k_max = {p.k_max} exceeds the cutoff N - 1 = {N - 1}")
    V = build_V(p, N)
    return [V @ delta_k(k, N) @ V.conj().T for k in range(1, p.k_max + 1)]


def assemble_protocol_state(p: ProtocolParams, N: int) -> DensityOperator:
    """``|Psi><Psi| + sum_k V delta_k V^dag`` on the ``N``-level Fock space, trace-normalized."""
    if p.k_max > N - 2:
        raise DimensionError(f"k_max = {p.k_max} exceeds N - 2 = {N - 2}")
    psi = build_squeezed(p.a, N).amplitudes
    mat = np.outer(psi, psi.conj())
    for term in protocol_terms(p, N):
        mat = mat + term
    mat = mat / np.trace(mat).real
    return DensityOperator(mat, (N, N), trace_normalized=True,
                           meta={"kind": "protocol", "beta": p.beta, "gamma": p.gamma,
                                 "k_max": p.k_max, "N": N})


def to_state_levels(op: DensityOperator) -> DensityOperator:
    """Drop occupation 0 on both modes and renormalize (occupation n -> level n)."""
    N = op.dims[0]
    keep = range(2, N + 1)
    return project_local(op, keep, keep)


def occupation_pair_vector(n: int, m: int, p: ProtocolParams, N: int) -> np.ndarray:
    """``c^m a^n |n, m> + c^-m a^m |m, n>`` in occupation labels (``n = 0`` allowed)."""
    v = np.zeros(N * N)
    v[n * N + m] += math.exp(-p.gamma * m - p.beta * n)
    v[m * N + n] += math.exp(-(p.beta - p.gamma) * m)
    return v


def pair_projector_sum(k: int, p: ProtocolParams, N: int) -> np.ndarray:
    """``sum_n |Psi_{n+k,n}><Psi_{n+k,n}|`` over occupations ``n = 0..N-1-k``."""
    out = np.zeros((N * N, N * N))
    for n in range(N - k):
        v = occupation_pair_vector(n, n + k, p, N)
        out += np.outer(v, v)
    return out


@dataclass(frozen=True)
class KerrApprox:
    error: float
    aliased: tuple
    operator: np.ndarray = field(repr=False)


def uniform_phases(L: int) -> np.ndarray:
    """``x_i = 2 pi i / L`` for ``i = 1..L``."""
    return 2 * np.pi * np.arange(1, L + 1) / L


def kerr_delta_approx(k: int, phases, N: int) -> KerrApprox:
    """Averaged phase shifter ``(1/L) sum_i exp(i x_i (n_A - n_B + k))``.

    ``error`` is the sup-norm distance to ``delta_k`` on the truncation;
    ``aliased`` lists the values of ``n_A - n_B + k`` where the approximation
    deviates from the Kronecker delta by more than 1e-12.
    """
    phases = np.asarray(phases, dtype=float).ravel()
    if phases.size == 0:
        raise ValueError("need at least one phase")
    n_a, n_b = occupations(N)
    s = n_a - n_b + k
    vals = np.exp(1j * np.outer(s, phases)).mean(axis=1)
    op = np.diag(vals)
    target = (s == 0).astype(float)
    dev = np.abs(vals - target)
    aliased = tuple(sorted(set(int(x) for x in s[dev > 1e-12])))
    return KerrApprox(float(dev.max()), aliased, op)


@dataclass(frozen=True)
class OpticsReport:
    frobenius_distance: float
    per_k_residuals: dict
    squeezed_residual: float
    kerr_table: list


def verify(p: ProtocolParams, N: int, kerr_N: int | None = None) -> OpticsReport:
    """Compare the optical mixture with the direct construction of ρ.

    The direct reference is ρ on levels ``1..N-1``, band-limited to pair gaps
    ``m - n <= k_max`` (the full state when ``k_max = N - 2``).
    """
    state = to_state_levels(assemble_protocol_state(p, N))
    ref = build_rho(CVParams(p.a, p.c, N - 1),
                    max_gap=None if p.k_max >= N - 2 else p.k_max)
    dist = float(np.linalg.norm(state.matrix - ref.matrix))
    V = build_V(p, N)
    per_k = {}
    for k in range(1, p.k_max + 1):
        lhs = V @ delta_k(k, N) @ V.conj().T
        per_k[k] = float(np.max(np.abs(lhs - pair_projector_sum(k, p, N))))
    sq = build_squeezed(p.a, N).amplitudes
    n_a, n_b = occupations(N)
    expected = np.where(n_a == n_b, p.a ** n_a, 0.0)
    kerr_N = N if kerr_N is None else kerr_N
    table = []
    for k in range(0, min(p.k_max, kerr_N - 1) + 1):
        approx = kerr_delta_approx(k, p.kerr_phases(), kerr_N)
        table.append({"k": k, "levels": int(p.levels), "error": approx.error,
                      "aliased": list(approx.aliased)})
    return OpticsReport(dist, per_k, float(np.max(np.abs(sq - expected))), table)

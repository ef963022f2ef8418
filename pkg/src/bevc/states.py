"""Constructors for the continuous-variable PPT states and their finite Σ(α) family."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import DEFAULT
from .errors import DimensionError
from .hilbert import DensityOperator, PureVector, flat_index, partial_trace


@dataclass(frozen=True)
class CVParams:
    """Geometric family ``a_n = a**n``, ``c_n = c**n`` truncated at ``N`` levels per mode.

    General (possibly complex) sequences can be supplied through ``a_seq`` and
    ``c_seq``; they override ``a`` and ``c`` for level ``n = 1..N``. The
    normalization tail bound is only available for the geometric family.
    """

    a: float
    c: float
    N: int
    a_seq: tuple | None = None
    c_seq: tuple | None = None

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"N must be >= 2, got {self.N}")
        if self.a_seq is None and self.c_seq is None:
            if not 0 < self.a < self.c < 1:
                raise ValueError(f"need 0 < a < c < 1, got a={self.a}, c={self.c}")
            return
        a_seq, c_seq = self.amplitudes()
        if np.any(a_seq == 0):
            raise ValueError("a_n must be nonzero")
        mod = np.abs(c_seq)
        if not (np.all(mod > 0) and np.all(mod < 1) and np.all(np.diff(mod) < 0)):
            raise ValueError("need 0 < |c_{n+1}| < |c_n| < 1")

    @classmethod
    def from_beta_gamma(cls, beta: float, gamma: float, N: int) -> "CVParams":
        """``a = exp(-beta)``, ``c = exp(-gamma)``; requires ``0 < gamma < beta``."""
        if not 0 < gamma < beta:
            raise ValueError(f"need 0 < gamma < beta, got beta={beta}, gamma={gamma}")
        return cls(math.exp(-beta), math.exp(-gamma), N)

    @property
    def geometric(self) -> bool:
        return self.a_seq is None and self.c_seq is None

    def amplitudes(self) -> tuple[np.ndarray, np.ndarray]:
        """Arrays ``(a_n, c_n)`` for ``n = 1..N`` (index 0 holds level 1)."""
        n = np.arange(1, self.N + 1)
        a_seq = (np.asarray(self.a_seq, dtype=complex)[: self.N] if self.a_seq is not None
                 else self.a ** n + 0j)
        c_seq = (np.asarray(self.c_seq, dtype=complex)[: self.N] if self.c_seq is not None
                 else self.c ** n + 0j)
        if a_seq.size < self.N or c_seq.size < self.N:
            raise ValueError(f"sequences must provide at least N={self.N} terms")
        return a_seq, c_seq

    def describe(self) -> dict:
        if self.geometric:
            return {"kind": "rho", "a": self.a, "c": self.c, "N": self.N}
        return {"kind": "rho", "N": self.N, "sequences": True}


@dataclass(frozen=True)
class AlphaFamily:
    """Coefficients ``alpha_2..alpha_K`` of Σ; ``alphas[j]`` is ``alpha_{j+2}``."""

    K: int
    alphas: tuple

    def __post_init__(self):
        alphas = tuple(float(x) for x in np.asarray(self.alphas, dtype=float).ravel())
        if self.K < 2:
            raise ValueError(f"K must be >= 2, got {self.K}")
        if len(alphas) != self.K - 1:
            raise ValueError(f"need K-1 = {self.K - 1} alphas, got {len(alphas)}")
        if not all(x > 0 and math.isfinite(x) for x in alphas):
            raise ValueError("alphas must be finite and strictly positive")
        object.__setattr__(self, "alphas", alphas)

    def alpha(self, m: int) -> float:
        if not 2 <= m <= self.K:
            raise IndexError(f"alpha_m defined for m in 2..{self.K}, got {m}")
        return self.alphas[m - 2]

    @property
    def strictly_decreasing(self) -> bool:
        a = self.alphas
        return 0 < a[-1] and a[0] < 1 and all(x > y for x, y in zip(a, a[1:]))

    def unnormalized_trace(self) -> float:
        return self.K + sum((m - 1) * (self.alpha(m) ** 2 + self.alpha(m) ** -2)
                            for m in range(2, self.K + 1))


@dataclass(frozen=True)
class NormalizationBreakdown:
    N: int
    psi_norm_sq: float
    pair_sum: float
    A: float
    tail_bound: float
    # limits derived by summing the geometric series term by term
    psi_norm_sq_limit: float
    pair_sum_limit: float
    # the published closed form, evaluated verbatim; None when singular
    published_closed_form: float | None
    note: str


# -- pure vectors --------------------------------------------------------------

def build_psi(p: CVParams) -> PureVector:
    """Unnormalized ``sum_n a_n |n, n>`` on levels ``1..N``."""
    a_seq, _ = p.amplitudes()
    amps = np.zeros(p.N * p.N, dtype=complex)
    for n in range(1, p.N + 1):
        amps[flat_index(n, n, (p.N, p.N))] = a_seq[n - 1]
    return PureVector(amps, (p.N, p.N))


def build_psi_mn(n: int, m: int, p: CVParams) -> PureVector:
    """``c_m a_n |n, m> + c_m^{-1} a_m |m, n>`` for ``1 <= n < m <= N``."""
    if not 1 <= n < m <= p.N:
        raise ValueError(f"need 1 <= n < m <= {p.N}, got n={n}, m={m}")
    a_seq, c_seq = p.amplitudes()
    dims = (p.N, p.N)
    amps = np.zeros(p.N * p.N, dtype=complex)
    amps[flat_index(n, m, dims)] = c_seq[m - 1] * a_seq[n - 1]
    amps[flat_index(m, n, dims)] = a_seq[m - 1] / c_seq[m - 1]
    return PureVector(amps, dims)


def _pairs(N: int, max_gap: int | None):
    for m in range(2, N + 1):
        for n in range(1, m):
            if max_gap is None or m - n <= max_gap:
                yield n, m


def rho_unnormalized(p: CVParams, max_gap: int | None = None) -> np.ndarray:
    """``|Psi><Psi| + sum_{n<m<=N} |Psi_mn><Psi_mn|`` without the ``1/A`` factor.

    ``max_gap`` keeps only pairs with ``m - n <= max_gap`` (band-limited
    reference used when comparing against a partial optical mixture).
    """
    a_seq, c_seq = p.amplitudes()
    dims = (p.N, p.N)
    psi = build_psi(p).amplitudes
    mat = np.outer(psi, psi.conj())
    for n, m in _pairs(p.N, max_gap):
        i, j = flat_index(n, m, dims), flat_index(m, n, dims)
        u, w = c_seq[m - 1] * a_seq[n - 1], a_seq[m - 1] / c_seq[m - 1]
        # two-entry outer product written out to avoid a dense d*d update per pair
        mat[i, i] += u * np.conj(u)
        mat[j, j] += w * np.conj(w)
        mat[i, j] += u * np.conj(w)
        mat[j, i] += w * np.conj(u)
    return mat


def build_rho(p: CVParams, max_gap: int | None = None) -> DensityOperator:
    """Trace-normalized truncated state, divided by the truncated normalization ``A_N``."""
    mat = rho_unnormalized(p, max_gap)
    a_n = np.trace(mat).real
    meta = {**p.describe(), "A_N": float(a_n)}
    if max_gap is not None:
        meta["max_gap"] = max_gap
    return DensityOperator(mat / a_n, (p.N, p.N), trace_normalized=True, meta=meta)


def normalization(p: CVParams) -> NormalizationBreakdown:
    """Truncated normalization with a geometric-majorant tail bound.

    The tail bound dominates ``A_inf - A_N``: it sums the omitted ``|Psi>``
    terms and, for every omitted pair ``m > N``, bounds the inner sum over
    ``n < m`` by the full geometric series.
    """
    if not p.geometric:
        raise ValueError("normalization bookkeeping needs the geometric family")
    a, c, N = p.a, p.c, p.N
    a2, c2 = a * a, c * c
    n = np.arange(1, N + 1)
    psi_norm_sq = float(np.sum(a2 ** n))
    pair_sum = 0.0
    for m in range(2, N + 1):
        inner = np.arange(1, m)
        pair_sum += float(np.sum(c2 ** m * a2 ** inner)) + (m - 1) * (a2 / c2) ** m
    r = a2 / c2
    tail = (a2 ** (N + 1) / (1 - a2)
            + a2 / (1 - a2) * c2 ** (N + 1) / (1 - c2)
            + r ** (N + 1) * (N * (1 - r) + r) / (1 - r) ** 2)
    psi_limit = a2 / (1 - a2)
    pair_limit = a2 * c2 * c2 / ((1 - c2) * (1 - a2 * c2)) + r * r / (1 - r) ** 2
    closed = published_pair_sum_closed_form(a, c)
    if closed is None:
        note = "published closed form not evaluable (c^2 <= a^2 or c^2 <= a^4)"
    else:
        note = (f"published closed form {closed:.17g} differs from the term-by-term limit "
                f"{pair_limit:.17g} of sum_(n<m) ||Psi_mn||^2 (n, m >= 1); reported, not used")
    return NormalizationBreakdown(N, psi_norm_sq, pair_sum, psi_norm_sq + pair_sum, float(tail),
                                  psi_limit, pair_limit, closed, note)


def published_pair_sum_closed_form(a: float, c: float) -> float | None:
    """``a^4 c^4 / ((1-c^2)(1-a^2 c^2)) + a^6 / ((c^2-a^2)(c^2-a^4))`` or None if singular."""
    a2, c2 = a * a, c * c
    if c2 <= a2 or c2 <= a2 * a2 or c2 >= 1 or a2 * c2 >= 1:
        return None
    return a2 * a2 * c2 * c2 / ((1 - c2) * (1 - a2 * c2)) + a2 ** 3 / ((c2 - a2) * (c2 - a2 * a2))


# -- the finite family -------------------------------------------------------

def sigma_unnormalized(f: AlphaFamily) -> np.ndarray:
    K = f.K
    dims = (K, K)
    phi = np.zeros(K * K)
    for n in range(1, K + 1):
        phi[flat_index(n, n, dims)] = 1.0
    mat = np.outer(phi, phi).astype(complex)
    for n, m in _pairs(K, None):
        v = np.zeros(K * K)
        v[flat_index(n, m, dims)] = f.alpha(m)
        v[flat_index(m, n, dims)] = 1.0 / f.alpha(m)
        mat += np.outer(v, v)
    return mat


def build_sigma(f: AlphaFamily) -> DensityOperator:
    mat = sigma_unnormalized(f)
    tr = np.trace(mat).real
    meta = {"kind": "sigma", "K": f.K, "alphas": list(f.alphas), "unnormalized_trace": float(tr)}
    return DensityOperator(mat / tr, (f.K, f.K), trace_normalized=True, meta=meta)


def build_choi() -> DensityOperator:
    """Σ with ``K = 3`` and both alphas equal to 2."""
    return build_sigma(AlphaFamily(3, (2.0, 2.0)))


def apply_local_filter(op: DensityOperator, diag_a: Sequence[complex]) -> DensityOperator:
    """``(V (x) I) op (V (x) I)^dagger`` for diagonal ``V`` on side A, renormalized."""
    d_a, d_b = op.dims
    diag_a = np.asarray(diag_a, dtype=complex)
    if diag_a.size != d_a:
        raise DimensionError(f"filter has {diag_a.size} entries, side A has {d_a} levels")
    scale = np.repeat(diag_a, d_b)
    mat = scale[:, None] * op.matrix * scale.conj()[None, :]
    tr = np.trace(mat).real
    return DensityOperator(mat / tr, op.dims, trace_normalized=True, meta=dict(op.meta))


def filter_to_sigma(rho_projected: DensityOperator, p: CVParams, rows: Sequence[int]) -> DensityOperator:
    """Undo the ``a_n`` weights on side A of a projected ρ.

    ``rows`` are the original level labels kept on both sides. The result is
    Σ with ``alpha_m = c_{n_m}`` (already relabeled to ``1..K``).
    """
    rows = sorted(set(int(r) for r in rows))
    K = len(rows)
    if rho_projected.dims != (K, K):
        raise DimensionError(f"projected state has dims {rho_projected.dims}, expected {(K, K)}")
    if rows[0] < 1 or rows[-1] > p.N:
        raise DimensionError(f"rows must lie in 1..{p.N}")
    a_seq, c_seq = p.amplitudes()
    a_rows = a_seq[np.array(rows) - 1]
    if np.any(a_rows == 0):
        raise ZeroDivisionError("filter needs nonzero a_n on the kept rows")
    out = apply_local_filter(rho_projected, 1.0 / a_rows)
    alphas = [float(c_seq[n - 1].real) for n in rows[1:]]
    meta = {"kind": "sigma", "K": K, "alphas": alphas, "rows": rows}
    return DensityOperator(out.matrix, out.dims, trace_normalized=True, meta=meta)


# -- trivial direct sum -------------------------------------------------------

def embed_block(block: DensityOperator, offset_a: int, offset_b: int, dims) -> np.ndarray:
    """Place ``block`` on levels ``offset+1 .. offset+d`` of a larger space (0-based offsets)."""
    d_a, d_b = dims
    b_a, b_b = block.dims
    if offset_a + b_a > d_a or offset_b + b_b > d_b or offset_a < 0 or offset_b < 0:
        raise DimensionError("block window exceeds the target space")
    rows = np.array([(offset_a + i) * d_b + offset_b + j for i in range(b_a) for j in range(b_b)])
    out = np.zeros((d_a * d_b, d_a * d_b), dtype=complex)
    out[np.ix_(rows, rows)] = block.matrix
    return out


def build_direct_sum(block: DensityOperator, probs: Sequence[float],
                     offsets: Sequence[int] | None = None,
                     tol: float = DEFAULT.trace_tol) -> DensityOperator:
    """``sum_n p_n sigma_n`` with copies of ``block`` on disjoint level windows.

    Copy ``n`` sits on levels ``offsets[n]+1 .. offsets[n]+d`` on both sides
    (defaults to back-to-back windows). Overlapping windows are rejected.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or probs.size == 0:
        raise ValueError("probs must be a nonempty 1-d array")
    if np.any(probs < 0) or abs(probs.sum() - 1) > tol:
        raise ValueError("probs must be nonnegative and sum to 1")
    if block.dims[0] != block.dims[1]:
        raise DimensionError("direct sum expects a square d x d block")
    d = block.dims[0]
    if offsets is None:
        offsets = [k * d for k in range(probs.size)]
    offsets = [int(o) for o in offsets]
    if len(offsets) != probs.size:
        raise ValueError("need one offset per probability")
    ordered = sorted(offsets)
    if any(b - a < d for a, b in zip(ordered, ordered[1:])):
        raise DimensionError(f"windows of width {d} at offsets {offsets} overlap")
    total = ordered[-1] + d
    mat = sum(p * embed_block(block, o, o, (total, total)) for p, o in zip(probs, offsets))
    meta = {"kind": "direct-sum", "block_dims": list(block.dims), "probs": probs.tolist(),
            "offsets": offsets}
    return DensityOperator(mat, (total, total), trace_normalized=block.trace_normalized, meta=meta)


def direct_sum_components(block: DensityOperator, n_copies: int, offsets=None) -> list[DensityOperator]:
    d = block.dims[0]
    offsets = [k * d for k in range(n_copies)] if offsets is None else list(offsets)
    total = max(offsets) + d
    return [DensityOperator(embed_block(block, o, o, (total, total)), (total, total))
            for o in offsets]


def locally_orthogonal(components: Sequence[DensityOperator], tol: float = 1e-12) -> bool:
    """True when distinct components have orthogonal reduced supports on both sides."""
    reduced = [(partial_trace(c, "A"), partial_trace(c, "B")) for c in components]
    for i in range(len(reduced)):
        for j in range(i + 1, len(reduced)):
            for side in (0, 1):
                if np.max(np.abs(reduced[i][side] @ reduced[j][side])) > tol:
                    return False
    return True

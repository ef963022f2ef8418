"""Entanglement certification: PPT, range criterion (exact for Σ(α), numerical otherwise)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import DEFAULT, SearchConfig, TruncationConfig
from .errors import NotAProjectorError, NotAStateError, NumericalError
from .hilbert import (DensityOperator, PureVector, filter_normal_form, min_eigenvalue,
                      partial_transpose, range_projector, schmidt)
from .states import AlphaFamily, CVParams, build_psi, build_rho, build_sigma

BOUND_ENTANGLED_CERTIFIED = "BOUND_ENTANGLED_CERTIFIED"
INCONCLUSIVE = "INCONCLUSIVE"
NPT = "NPT"
VERDICTS = (BOUND_ENTANGLED_CERTIFIED, INCONCLUSIVE, NPT)


@dataclass(frozen=True)
class PptVerdict:
    is_ppt: bool
    min_pt_eigenvalue: float
    tolerance: float


@dataclass(frozen=True)
class ProductVector:
    phi: np.ndarray
    chi: np.ndarray

    def __post_init__(self):
        for name in ("phi", "chi"):
            v = np.asarray(getattr(self, name), dtype=complex).ravel()
            norm = np.linalg.norm(v)
            if norm == 0:
                raise ValueError(f"{name} must be nonzero")
            object.__setattr__(self, name, v / norm)

    @property
    def dims(self) -> tuple[int, int]:
        return self.phi.size, self.chi.size

    def vector(self) -> np.ndarray:
        return np.kron(self.phi, self.chi)


@dataclass(frozen=True)
class RangeSearchResult:
    residual: float
    best_product: ProductVector
    restarts: int
    iterations_used: int
    converged: bool
    best_restart: int
    # final objective of every restart, in restart order
    restart_values: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class AlphaDecision:
    entangled_certified: bool
    violated_indices: frozenset
    witness_product: ProductVector | None = None
    # x_i, g and g_ij of the explicit solution when one exists
    solver_data: dict | None = None
    range_residual: float | None = None


# -- PPT -----------------------------------------------------------------------

def _require_state(op: DensityOperator, cfg: TruncationConfig):
    if abs(op.trace - 1) > cfg.trace_tol:
        raise NotAStateError(f"trace {op.trace:.17g} is not 1")
    lo = min_eigenvalue(op)
    if lo < -cfg.range_tol:
        raise NotAStateError(f"state has eigenvalue {lo:.3e}")


def ppt_check(op: DensityOperator, tol: float | None = None,
              cfg: TruncationConfig = DEFAULT) -> PptVerdict:
    tol = cfg.ppt_tol if tol is None else tol
    _require_state(op, cfg)
    lo = min_eigenvalue(partial_transpose(op))
    return PptVerdict(lo >= -tol, lo, tol)


# -- exact decision for Σ(α) -------------------------------------------------

def alpha_decision(f: AlphaFamily, tol: float = 1e-12,
                   cfg: TruncationConfig = DEFAULT) -> AlphaDecision:
    """Decide whether the range of Σ(α) contains a product vector.

    Writing a candidate product vector as ``g Phi + sum g_ij Phi_ij``: with
    ``g != 0`` the diagonal forces ``psi = x``, ``phi = 1/x`` and the pair
    components force ``(x_i / x_j)^2 = alpha_j^2`` for every ``i < j``. For
    ``K >= 3`` this is solvable iff ``alpha_j^2 = 1`` for ``j = 2..K-1``; the
    last coefficient only fixes ``x_K``. With ``g = 0`` the supports of the
    two factors are disjoint and every ``g_ij`` vanishes. So Σ is range
    entangled iff one of the middle conditions is violated.
    """
    K = f.K
    violated = frozenset(j for j in range(2, K) if abs(f.alpha(j) ** 2 - 1) > tol)
    if violated:
        return AlphaDecision(True, violated)

    x = np.ones(K)
    x[-1] = 1.0 / f.alpha(K)
    g_ij = {}
    for i in range(1, K + 1):
        for j in range(i + 1, K + 1):
            g_ij[(i, j)] = float(x[i - 1] / (x[j - 1] * f.alpha(j)))
    product = ProductVector(x, 1.0 / x)
    proj = range_projector(build_sigma(f), cfg.range_tol)
    v = product.vector()
    residual = float(np.vdot(v, v).real - proj.expectation(v))
    if residual > 1e-10:
        raise NumericalError(f"explicit product vector left the range (residual {residual:.3e})")
    return AlphaDecision(False, violated, product,
                         {"x": x.tolist(), "g": 1.0,
                          "g_ij": {f"{i},{j}": val for (i, j), val in g_ij.items()}},
                         residual)


# -- numerical product-vector search ------------------------------------------

def restart_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for restart ``index``, reproducible for any schedule."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _lowest(mats: np.ndarray, prev: np.ndarray, deg_tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Lowest eigenvalue and eigenvector of each matrix in a batch.

    Inside a degenerate lowest eigenspace the vector closest to ``prev`` is
    returned.
    """
    try:
        w, vecs = np.linalg.eigh(mats)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    mask = w <= w[:, :1] + deg_tol
    coeff = np.einsum("rik,ri->rk", vecs.conj(), prev) * mask
    cand = np.einsum("rik,rk->ri", vecs, coeff)
    norms = np.linalg.norm(cand, axis=1)
    fallback = norms < 1e-8
    cand[fallback] = vecs[fallback, :, 0]
    norms[fallback] = 1.0
    return w[:, 0], cand / norms[:, None]


def minimize_product_expectation(M: np.ndarray, dims, cfg: SearchConfig = DEFAULT.search) -> RangeSearchResult:
    """Minimize ``<phi chi|M|phi chi>`` over unit product vectors.

    Alternating exact best responses: for fixed ``chi`` the optimal ``phi`` is
    the lowest eigenvector of the contracted ``d_A x d_A`` matrix, and vice
    versa. All restarts run as one batch; each is frozen once a full sweep
    improves it by less than ``cfg.eps_conv``.
    """
    d_a, d_b = dims
    T = np.asarray(M, dtype=complex).reshape(d_a, d_b, d_a, d_b)
    R = cfg.restarts
    phi = np.empty((R, d_a), dtype=complex)
    chi = np.empty((R, d_b), dtype=complex)
    for r in range(R):
        rng = restart_rng(cfg.seed, r)
        phi[r] = rng.standard_normal(d_a) + 1j * rng.standard_normal(d_a)
        chi[r] = rng.standard_normal(d_b) + 1j * rng.standard_normal(d_b)
    phi /= np.linalg.norm(phi, axis=1, keepdims=True)
    chi /= np.linalg.norm(chi, axis=1, keepdims=True)

    def value(p, c):
        return np.einsum("ri,rm,imjn,rj,rn->r", p.conj(), c.conj(), T, p, c).real

    scale = max(1.0, float(np.max(np.abs(T))) * d_a * d_b)
    slack = cfg.monotone_slack * scale
    f = value(phi, chi)
    active = np.ones(R, dtype=bool)
    iters = np.zeros(R, dtype=int)
    for _ in range(cfg.max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        p, c = phi[idx], chi[idx]
        mats_a = np.einsum("rm,imjn,rn->rij", c.conj(), T, c)
        f_half, p = _lowest(mats_a, p, cfg.degeneracy_tol)
        mats_b = np.einsum("ri,imjn,rj->rmn", p.conj(), T, p)
        f_new, c = _lowest(mats_b, c, cfg.degeneracy_tol)
        f_old = f[idx]
        if np.any(f_half > f_old + slack) or np.any(f_new > f_half + slack):
            raise NumericalError("alternating minimization increased the objective")
        phi[idx], chi[idx] = p, c
        f[idx] = f_new
        iters[idx] += 1
        active[idx[f_old - f_new < cfg.eps_conv]] = False

    f = value(phi, chi)
    best = int(np.argmin(f))
    return RangeSearchResult(
        residual=float(min(max(f[best], 0.0), 1.0)),
        best_product=ProductVector(phi[best], chi[best]),
        restarts=R,
        iterations_used=int(iters[best]),
        converged=not bool(active[best]),
        best_restart=best,
        restart_values=f,
    )


def check_projector(P: DensityOperator, tol: float = DEFAULT.projector_tol):
    defect = float(np.max(np.abs(P.matrix @ P.matrix - P.matrix)))
    if defect > tol:
        raise NotAProjectorError(f"idempotence defect {defect:.3e} exceeds {tol:.1e}")


def product_in_range_search(P: DensityOperator, cfg: TruncationConfig = DEFAULT) -> RangeSearchResult:
    """Smallest distance² of a unit product vector from the range of projector ``P``."""
    check_projector(P, cfg.projector_tol)
    M = np.eye(P.dim) - P.matrix
    return minimize_product_expectation(M, P.dims, cfg.search)


# -- combined certification ----------------------------------------------------

@dataclass(frozen=True)
class CertificationReport:
    descriptor: dict
    dims: tuple[int, int]
    ppt: PptVerdict
    search: RangeSearchResult
    range_rank: int
    alpha: AlphaDecision | None
    verdict: str
    notes: tuple[str, ...]
    cfg: TruncationConfig
    # search on the state as given; ``search`` ran on the balanced state when this differs
    raw_search: RangeSearchResult | None = None
    balance_iterations: int | None = None
    witness: dict | None = None

    def to_dict(self) -> dict:
        cfg = self.cfg
        s = self.search
        out = {
            "input": dict(self.descriptor),
            "dims": list(self.dims),
            "verdict": self.verdict,
            "ppt": {
                "is_ppt": self.ppt.is_ppt,
                "min_pt_eigenvalue": _tag(self.ppt.min_pt_eigenvalue, "ppt_check", self.ppt.tolerance),
            },
            "range_search": {
                "evidence": "numerical",
                "representation": ("filter-normal-form" if self.balance_iterations is not None
                                   else "as-given"),
                "residual": _tag(s.residual, "product_in_range_search", cfg.entangle_margin),
                "range_rank": _tag(self.range_rank, "range_projector", cfg.range_tol),
                "restarts": s.restarts,
                "best_restart": s.best_restart,
                "iterations_used": s.iterations_used,
                "converged": s.converged,
                "max_iters": cfg.search.max_iters,
                "eps_conv": cfg.search.eps_conv,
                "seed": cfg.search.seed,
                "best_product": {"phi": _cplx(s.best_product.phi), "chi": _cplx(s.best_product.chi)},
            },
            "notes": list(self.notes),
        }
        if self.raw_search is not None:
            out["range_search"]["raw_residual"] = _tag(self.raw_search.residual,
                                                       "product_in_range_search", cfg.entangle_margin)
            out["range_search"]["balance_iterations"] = self.balance_iterations
        if self.alpha is not None:
            a = self.alpha
            out["alpha_decision"] = {
                "evidence": "exact",
                "entangled_certified": a.entangled_certified,
                "violated_indices": sorted(a.violated_indices),
                "solver_data": a.solver_data,
                "range_residual": (None if a.range_residual is None
                                   else _tag(a.range_residual, "alpha_decision", 1e-10)),
            }
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def _tag(value, op: str, tol: float) -> dict:
    return {"value": value, "op": op, "tol": tol}


def _cplx(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v)]


def _sigma_family(op: DensityOperator, cfg: TruncationConfig) -> AlphaFamily | None:
    """AlphaFamily from Σ metadata, if present and consistent with the matrix."""
    meta = op.meta
    if meta.get("kind") != "sigma" or "alphas" not in meta:
        return None
    try:
        fam = AlphaFamily(int(meta["K"]), tuple(meta["alphas"]))
    except (KeyError, ValueError, TypeError):
        return None
    if op.dims != (fam.K, fam.K):
        return None
    if np.max(np.abs(build_sigma(fam).matrix - op.matrix)) > 1e-10:
        return None
    return fam


def certify(op: DensityOperator, cfg: TruncationConfig = DEFAULT) -> CertificationReport:
    """PPT check plus range criterion.

    With ``cfg.balance`` the product-vector search runs on the filter normal
    form of ``op`` (an invertible local filtering, which leaves both the PPT
    property and the presence of product vectors in the range unchanged); the
    search on ``op`` as given is kept in ``raw_search``.
    """
    ppt = ppt_check(op, cfg=cfg)
    proj = range_projector(op, cfg.range_tol)
    search = product_in_range_search(proj, cfg)
    raw_search, balance_iterations = None, None
    notes = []
    if cfg.balance:
        bal = filter_normal_form(op, cfg.balance_iters, cfg.balance_tol)
        if bal is None:
            notes.append("singular marginal: search ran on the state as given")
        else:
            raw_search, balance_iterations = search, bal.iterations
            search = product_in_range_search(range_projector(bal.state, cfg.range_tol), cfg)
    fam = _sigma_family(op, cfg)
    alpha = alpha_decision(fam, cfg=cfg) if fam is not None else None
    found_none = search.residual > cfg.entangle_margin
    if not ppt.is_ppt:
        verdict = NPT
    elif found_none and (alpha is None or alpha.entangled_certified):
        verdict = BOUND_ENTANGLED_CERTIFIED
        if alpha is None:
            notes.append("entanglement evidence is numerical: no product vector found in the range")
        else:
            notes.append("range entanglement proven by the exact alpha decision, confirmed numerically")
    else:
        verdict = INCONCLUSIVE
        if alpha is not None and alpha.entangled_certified != found_none:
            notes.append("exact alpha decision and numerical search disagree")
        else:
            notes.append("a product vector lies in the range; the range criterion is one-way "
                         "and does not certify separability")
    if ppt.is_ppt and op.dims[0] * op.dims[1] <= 6:
        notes.append("for 2x2 and 2x3 systems PPT implies separability")
    desc = {k: v for k, v in op.meta.items() if k != "unnormalized_trace"}
    return CertificationReport(desc, op.dims, ppt, search, int(proj.meta["rank"]), alpha,
                               verdict, tuple(notes), cfg, raw_search, balance_iterations)


# -- Schmidt-rank growth ---------------------------------------------------------

@dataclass(frozen=True)
class SchmidtScanRow:
    K: int
    psi_rank: int
    leading_eigvec_rank: int
    leading_eigenvalue: float


def schmidt_rank_scan(p: CVParams, K_list: Sequence[int],
                      cfg: TruncationConfig = DEFAULT) -> list[SchmidtScanRow]:
    """Schmidt rank of ``|Psi>`` and of the leading eigenvector of ρ at each truncation ``K``."""
    K_list = list(K_list)
    if not K_list:
        raise ValueError("empty K list")
    if any(b <= a for a, b in zip(K_list, K_list[1:])):
        raise ValueError("K list must be strictly ascending")
    if K_list[0] < 2 or K_list[-1] > p.N:
        raise ValueError(f"K values must lie in 2..{p.N}")
    rows = []
    for K in K_list:
        pk = CVParams(p.a, p.c, K, p.a_seq, p.c_seq)
        psi_rank = schmidt(build_psi(pk), cfg.rank_tol).rank
        w, vecs = np.linalg.eigh(build_rho(pk).matrix)
        lead = PureVector(vecs[:, -1], (K, K))
        rows.append(SchmidtScanRow(K, psi_rank, schmidt(lead, cfg.rank_tol).rank, float(w[-1])))
    return rows

"""Truncated two-mode Hilbert space.

Local levels carry 1-based labels externally (level ``n`` on side A, ``m`` on
side B); storage is 0-based and row-major with the A index major, so the flat
index of ``|n, m>`` is ``(n - 1) * d_B + (m - 1)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import IO, Iterable, Mapping

import numpy as np

from .config import DEFAULT, TruncationConfig
from .errors import DimensionError, NotAStateError, NotHermitianError, NumericalError

EXCHANGE_FORMAT = "bevc-operator/1"

Dims = tuple[int, int]


def _check_dims(dims) -> Dims:
    d_a, d_b = (int(d) for d in dims)
    if d_a < 1 or d_b < 1:
        raise DimensionError(f"local dimensions must be positive, got {dims}")
    return d_a, d_b


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BasisIndex:
    n: int
    m: int
    dims: Dims

    def __post_init__(self):
        d_a, d_b = self.dims
        if not (1 <= self.n <= d_a and 1 <= self.m <= d_b):
            raise DimensionError(f"level pair ({self.n}, {self.m}) outside {d_a}x{d_b}")

    @property
    def flat(self) -> int:
        return (self.n - 1) * self.dims[1] + (self.m - 1)

    @classmethod
    def from_flat(cls, flat: int, dims) -> "BasisIndex":
        d_a, d_b = _check_dims(dims)
        if not 0 <= flat < d_a * d_b:
            raise DimensionError(f"flat index {flat} outside 0..{d_a * d_b - 1}")
        return cls(flat // d_b + 1, flat % d_b + 1, (d_a, d_b))


def flat_index(n: int, m: int, dims) -> int:
    """Flat storage index of the 1-based level pair ``|n, m>``."""
    return BasisIndex(n, m, _check_dims(dims)).flat


@dataclass(frozen=True)
class PureVector:
    amplitudes: np.ndarray
    dims: Dims

    def __post_init__(self):
        dims = _check_dims(self.dims)
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size != dims[0] * dims[1]:
            raise DimensionError(f"{amps.size} amplitudes do not fit dims {dims}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def coefficient_matrix(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def normalized(self) -> "PureVector":
        norm = np.sqrt(self.norm_sq)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return PureVector(self.amplitudes / norm, self.dims)

    def projector(self) -> np.ndarray:
        """Unnormalized outer product ``|v><v|``."""
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def to_state(self) -> "DensityOperator":
        return DensityOperator(self.normalized().projector(), self.dims, trace_normalized=True)

    @classmethod
    def basis(cls, n: int, m: int, dims) -> "PureVector":
        dims = _check_dims(dims)
        amps = np.zeros(dims[0] * dims[1], dtype=complex)
        amps[flat_index(n, m, dims)] = 1.0
        return cls(amps, dims)

    @classmethod
    def product(cls, phi, chi) -> "PureVector":
        phi = np.asarray(phi, dtype=complex)
        chi = np.asarray(chi, dtype=complex)
        return cls(np.kron(phi, chi), (phi.size, chi.size))


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian matrix on the ``d_A * d_B`` product space.

    Used both for states (``trace_normalized=True``) and for general Hermitian
    operators such as projectors and witnesses. Inputs whose Hermiticity
    defect is below ``herm_tol`` are symmetrized, larger defects are rejected.
    """

    matrix: np.ndarray
    dims: Dims
    trace_normalized: bool = False
    meta: Mapping = field(default_factory=dict, compare=False)
    herm_tol: float = field(default=DEFAULT.herm_tol, repr=False, compare=False)
    trace_tol: float = field(default=DEFAULT.trace_tol, repr=False, compare=False)

    def __post_init__(self):
        dims = _check_dims(self.dims)
        mat = np.asarray(self.matrix, dtype=complex)
        d = dims[0] * dims[1]
        if mat.shape != (d, d):
            raise DimensionError(f"matrix of shape {mat.shape} does not match dims {dims}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("matrix entries must be finite")
        defect = float(np.max(np.abs(mat - mat.conj().T))) if d else 0.0
        if defect > self.herm_tol:
            raise NotHermitianError(f"Hermiticity defect {defect:.3e} exceeds {self.herm_tol:.1e}")
        mat = (mat + mat.conj().T) / 2
        if self.trace_normalized:
            tr = np.trace(mat).real
            if abs(tr - 1.0) > self.trace_tol:
                raise NotAStateError(f"|trace - 1| = {abs(tr - 1.0):.3e} exceeds {self.trace_tol:.1e}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", _frozen(mat))
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    @property
    def dim(self) -> int:
        return self.dims[0] * self.dims[1]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def eigvalsh(self) -> np.ndarray:
        return _eigvalsh(self.matrix)

    def normalized(self, **meta) -> "DensityOperator":
        tr = self.trace
        if tr <= 0:
            raise NotAStateError(f"cannot trace-normalize an operator with trace {tr:.3e}")
        return DensityOperator(self.matrix / tr, self.dims, trace_normalized=True,
                               meta={**self.meta, **meta})

    def tensor(self) -> np.ndarray:
        """View as a rank-4 array indexed ``[m, mu, n, nu]``."""
        d_a, d_b = self.dims
        return self.matrix.reshape(d_a, d_b, d_a, d_b)

    def expectation(self, vec) -> float:
        v = vec.amplitudes if isinstance(vec, PureVector) else np.asarray(vec, dtype=complex)
        return float(np.vdot(v, self.matrix @ v).real)


def _eigvalsh(mat: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc


def _eigh(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        return np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc


def partial_transpose(op: DensityOperator) -> DensityOperator:
    """Transpose the B indices: ``out[m mu, n nu] = op[m nu, n mu]``."""
    d_a, d_b = op.dims
    t = op.tensor().transpose(0, 3, 2, 1).reshape(op.dim, op.dim)
    return DensityOperator(t, op.dims, trace_normalized=op.trace_normalized,
                           herm_tol=op.herm_tol, trace_tol=op.trace_tol)


def pt_residual(op: DensityOperator) -> float:
    """Largest elementwise deviation between ``op`` and its partial transpose."""
    return float(np.max(np.abs(op.matrix - partial_transpose(op).matrix)))


def min_eigenvalue(op: DensityOperator) -> float:
    return float(op.eigvalsh()[0])


def partial_trace(op: DensityOperator, keep: str) -> np.ndarray:
    """Reduced operator on side ``"A"`` or ``"B"``."""
    t = op.tensor()
    if keep == "A":
        return np.einsum("ajbj->ab", t)
    if keep == "B":
        return np.einsum("iaib->ab", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


@dataclass(frozen=True)
class SchmidtData:
    coefficients: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    rank: int
    threshold: float


def schmidt(v: PureVector, rank_tol: float = DEFAULT.rank_tol) -> SchmidtData:
    """Schmidt decomposition via the SVD of the ``d_A x d_B`` coefficient matrix.

    ``left_vectors[:, k]`` and ``right_vectors[:, k]`` pair with
    ``coefficients[k]``, so ``v = sum_k s_k |u_k> |w_k>``. The rank counts
    coefficients above ``rank_tol`` times the largest one.
    """
    if v.norm_sq == 0:
        raise ValueError("Schmidt decomposition of the zero vector is undefined")
    try:
        u, s, wh = np.linalg.svd(v.coefficient_matrix())
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    threshold = rank_tol * s[0]
    rank = int(np.count_nonzero(s > threshold))
    return SchmidtData(s, u[:, : s.size], wh[: s.size].T, rank, threshold)


def range_projector(op: DensityOperator, tau: float = DEFAULT.range_tol) -> DensityOperator:
    """Orthogonal projector onto eigenvectors with eigenvalue above ``tau * lambda_max``."""
    w, vecs = _eigh(op.matrix)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if scale == 0:
        raise NotAStateError("zero operator has an empty range")
    if w[0] < -tau * scale:
        raise NotAStateError(f"eigenvalue {w[0]:.3e} below -tau*||op|| = {-tau * scale:.3e}")
    keep = vecs[:, w > tau * w[-1]]
    proj = keep @ keep.conj().T
    return DensityOperator(proj, op.dims, meta={"rank": int(keep.shape[1])},
                           herm_tol=max(op.herm_tol, 1e-12))


def _rows(rows: Iterable[int], d: int, side: str) -> list[int]:
    rows = sorted(set(int(r) for r in rows))
    if not rows:
        raise DimensionError(f"empty index set on side {side}")
    if rows[0] < 1 or rows[-1] > d:
        raise DimensionError(f"side {side} levels must lie in 1..{d}, got {rows}")
    return rows


def project_local(op: DensityOperator, rows_a: Iterable[int], rows_b: Iterable[int]) -> DensityOperator:
    """Local projective measurement ``P (x) Q op P (x) Q / Tr``, compressed to the kept levels.

    Kept levels are relabeled ``1..K`` in ascending order.
    """
    d_a, d_b = op.dims
    ra = _rows(rows_a, d_a, "A")
    rb = _rows(rows_b, d_b, "B")
    idx = np.array([(n - 1) * d_b + (m - 1) for n in ra for m in rb])
    sub = op.matrix[np.ix_(idx, idx)]
    tr = np.trace(sub).real
    if tr <= 0:
        raise NotAStateError("post-measurement trace is zero")
    return DensityOperator(sub / tr, (len(ra), len(rb)), trace_normalized=True,
                           meta={"rows_a": ra, "rows_b": rb})


# -- exchange format ---------------------------------------------------------

def _num(x: float) -> str:
    if x == 0:
        return "0.0"
    return format(float(x), ".17g")


def dumps_operator(op: DensityOperator, meta: Mapping | None = None) -> str:
    """Serialize to the text exchange format (17 significant digits per entry)."""
    header = {
        "format": EXCHANGE_FORMAT,
        "dims": list(op.dims),
        "layout": "row-major",
        "trace_normalized": op.trace_normalized,
        "meta": _jsonable({**op.meta, **(meta or {})}),
    }
    head = json.dumps(header, indent=1, sort_keys=True)[:-2]
    flat = op.matrix.ravel()
    rows = ",\n".join(f"  [{_num(z.real)}, {_num(z.imag)}]" for z in flat)
    return f'{head},\n "entries": [\n{rows}\n ]\n}}\n'


def loads_operator(text: str) -> DensityOperator:
    doc = json.loads(text)
    if doc.get("layout", "row-major") != "row-major":
        raise ValueError(f"unsupported layout {doc.get('layout')!r}")
    dims = _check_dims(doc["dims"])
    entries = np.asarray(doc["entries"], dtype=float)
    d = dims[0] * dims[1]
    if entries.shape != (d * d, 2):
        raise DimensionError(f"expected {d * d} (re, im) pairs, got array of shape {entries.shape}")
    mat = (entries[:, 0] + 1j * entries[:, 1]).reshape(d, d)
    return DensityOperator(mat, dims, trace_normalized=bool(doc.get("trace_normalized", False)),
                           meta=doc.get("meta", {}))


def write_operator(path: str | Path | IO[str], op: DensityOperator, meta: Mapping | None = None) -> None:
    text = dumps_operator(op, meta)
    if hasattr(path, "write"):
        path.write(text)
    else:
        Path(path).write_text(text)


def read_operator(path: str | Path) -> DensityOperator:
    return loads_operator(Path(path).read_text())


def _jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [_jsonable(v) for v in items]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


@dataclass(frozen=True)
class BalancedState:
    state: DensityOperator
    filter_a: np.ndarray
    filter_b: np.ndarray
    iterations: int
    marginal_defect: float


def _inv_sqrt(mat: np.ndarray, floor: float) -> np.ndarray | None:
    w, v = _eigh((mat + mat.conj().T) / 2)
    if w[0] <= floor * w[-1]:
        return None
    return (v / np.sqrt(w)) @ v.conj().T


def filter_normal_form(op: DensityOperator, max_iters: int = 500, tol: float = 1e-13,
                       floor: float = 1e-14) -> BalancedState | None:
    """Invertible local filter ``X (x) Y`` that makes both marginals maximally mixed.

    Alternately rescales with the inverse square roots of the two reduced
    operators. Invertible local filters preserve PPT and map product vectors
    to product vectors, so range-criterion questions are unchanged while the
    conditioning of the numerical search improves. Returns None when a
    marginal is singular (no invertible balancing filter exists). The last
    iterate is returned even if ``tol`` is not reached; it is still an
    invertible filter of the input.
    """
    d_a, d_b = op.dims
    mat = op.matrix / op.trace
    fa = np.eye(d_a, dtype=complex)
    fb = np.eye(d_b, dtype=complex)
    defect = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        x = _inv_sqrt(np.einsum("ajbj->ab", mat.reshape(d_a, d_b, d_a, d_b)), floor)
        if x is None:
            return None
        k = np.kron(x, np.eye(d_b))
        mat = k @ mat @ k.conj().T
        mat /= np.trace(mat).real
        fa = x @ fa
        y = _inv_sqrt(np.einsum("iaib->ab", mat.reshape(d_a, d_b, d_a, d_b)), floor)
        if y is None:
            return None
        k = np.kron(np.eye(d_a), y)
        mat = k @ mat @ k.conj().T
        mat /= np.trace(mat).real
        fb = y @ fb
        t = mat.reshape(d_a, d_b, d_a, d_b)
        defect = max(np.max(np.abs(np.einsum("ajbj->ab", t) - np.eye(d_a) / d_a)),
                     np.max(np.abs(np.einsum("iaib->ab", t) - np.eye(d_b) / d_b)))
        if defect < tol:
            break
    mat = (mat + mat.conj().T) / 2
    state = DensityOperator(mat / np.trace(mat).real, op.dims, trace_normalized=True)
    return BalancedState(state, fa, fb, it, float(defect))

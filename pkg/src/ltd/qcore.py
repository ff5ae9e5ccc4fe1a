"""Dense state types and the small linear-algebra toolbox built on them.

Everything in this package works on explicit complex128 arrays; there is no
sparse or symbolic path.  Density operators are validated once, at
construction, and trusted afterwards.  Helper functions accept either the
wrapped types or bare ndarrays where the meaning is unambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionError,
    NormalizationError,
    PositivityError,
    ShapeError,
    SizeError,
)

ComplexMatrix = np.ndarray

HERMITICITY_TOL = 1e-10
TRACE_REJECT_TOL = 1e-8
EIGENVALUE_FLOOR = -1e-9
STATE_NORM_TOL = 1e-12
ENTRY_CAP = 2 ** 24


def _as_square_array(m) -> np.ndarray:
    a = np.asarray(getattr(m, "matrix", m), dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square operator, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ShapeError("operator has non-finite entries")
    return a


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensityMatrix:
    """A validated density operator.

    Build these through :func:`validate_density`; direct construction trusts
    the caller and only coerces dtype and shape.
    """

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _as_square_array(self.matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.einsum("ij,ji->", self.matrix, self.matrix).real)


@dataclass(frozen=True)
class PureState:
    """A normalized state vector (norm enforced at 1e-12)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if a.size == 0 or not np.all(np.isfinite(a.real) & np.isfinite(a.imag)):
            raise ShapeError("state vector must be finite and non-empty")
        if abs(np.linalg.norm(a) - 1.0) > STATE_NORM_TOL:
            raise NormalizationError(
                f"state vector norm {np.linalg.norm(a):.16f} is not 1"
            )
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def normalized(cls, amplitudes: Iterable[complex]) -> "PureState":
        a = np.asarray(list(amplitudes), dtype=np.complex128)
        n = np.linalg.norm(a)
        if n == 0.0:
            raise NormalizationError("cannot normalize the zero vector")
        return cls(a / n)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> DensityMatrix:
        a = self.amplitudes
        return DensityMatrix(np.outer(a, a.conj()))


@dataclass(frozen=True)
class SubsystemSplit:
    """Factor dimensions of a tensor-product space, in tensor order."""

    dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) == 0 or any(d < 1 for d in dims):
            raise DimensionError(f"invalid subsystem dimensions {self.dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    def check_matches(self, dim: int) -> None:
        if self.total != dim:
            raise DimensionError(
                f"split {self.dims} implies dimension {self.total}, operator has {dim}"
            )


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def tensor_product(a, b):
    """Kronecker product of two operators or two state vectors.

    Refuses to materialize results beyond ENTRY_CAP dense entries.
    """
    aa = np.asarray(getattr(a, "matrix", getattr(a, "amplitudes", a)), dtype=np.complex128)
    bb = np.asarray(getattr(b, "matrix", getattr(b, "amplitudes", b)), dtype=np.complex128)
    entries = int(np.prod(aa.shape, dtype=np.int64) * np.prod(bb.shape, dtype=np.int64))
    if entries > ENTRY_CAP:
        raise SizeError(
            f"tensor product would hold {entries} entries, cap is {ENTRY_CAP}"
        )
    return np.kron(aa, bb)


def _ptrace_array(a: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    n = len(dims)
    keep = list(keep)
    if any(k < 0 or k >= n for k in keep) or len(set(keep)) != len(keep):
        raise DimensionError(f"keep indices {keep} invalid for {n} subsystems")
    a = a.reshape(tuple(dims) + tuple(dims))
    row = list(range(n))
    col = [n + i if i in keep else i for i in range(n)]
    out = [i for i in keep] + [n + i for i in keep]
    reduced = np.einsum(a, row + col, out)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return reduced.reshape(d, d)


def partial_trace(rho, split: SubsystemSplit, keep) -> DensityMatrix:
    """Trace out every subsystem not listed in ``keep`` (kept order preserved)."""
    a = _as_square_array(rho)
    split.check_matches(a.shape[0])
    if np.isscalar(keep):
        keep = (int(keep),)
    reduced = _ptrace_array(a, split.dims, tuple(int(k) for k in keep))
    return validate_density(reduced)


def validate_density(m) -> DensityMatrix:
    """Validate (and lightly repair) a candidate density operator.

    Hermiticity deviations below HERMITICITY_TOL are symmetrized away; the
    trace is renormalized when within TRACE_REJECT_TOL of one.  Anything
    worse is rejected, as is negativity beyond EIGENVALUE_FLOOR.
    """
    a = _as_square_array(m)
    dev = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if dev >= HERMITICITY_TOL:
        raise ShapeError(f"operator is non-Hermitian by {dev:.3e}")
    a = 0.5 * (a + a.conj().T)
    tr = float(a.trace().real)
    if abs(tr - 1.0) > TRACE_REJECT_TOL:
        raise NormalizationError(f"trace {tr!r} is too far from 1 to renormalize")
    a = a / tr
    w = np.linalg.eigvalsh(a)
    if float(w[0]) < EIGENVALUE_FLOOR:
        raise PositivityError(f"minimum eigenvalue {w[0]:.3e} below floor")
    return DensityMatrix(a)


def eigh(m):
    """Eigendecomposition of a Hermitian operator, eigenvalues ascending."""
    a = _as_square_array(m)
    dev = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if dev >= HERMITICITY_TOL:
        raise ShapeError(f"eigh expects a Hermitian operator, deviation {dev:.3e}")
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    return w, v


def von_neumann_entropy(rho) -> float:
    """Entropy in nats.  Eigenvalues in [EIGENVALUE_FLOOR, 0) clamp to zero."""
    a = _as_square_array(rho)
    w = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    if float(w[0]) < EIGENVALUE_FLOOR:
        raise PositivityError(f"entropy of a non-positive operator ({w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    w = w[w > 0.0]
    return float(-np.sum(w * np.log(w)))


def fidelity_pure(rho, psi: PureState) -> float:
    """Fidelity sqrt(<psi|rho|psi>) between a density and a pure reference."""
    a = _as_square_array(rho)
    if a.shape[0] != psi.dim:
        raise DimensionError(
            f"operator dimension {a.shape[0]} does not match state dimension {psi.dim}"
        )
    v = psi.amplitudes
    q = float(np.real(v.conj() @ (a @ v)))
    return float(np.sqrt(min(max(q, 0.0), 1.0)))


def overlap_norm(a, b) -> float:
    """Frobenius norm of the operator product a.b.

    Vanishes exactly when the supports are orthogonal, which is the
    orthogonality measure used by the branch diagnostics.
    """
    aa = _as_square_array(a)
    bb = _as_square_array(b)
    if aa.shape != bb.shape:
        raise DimensionError(f"operand shapes differ: {aa.shape} vs {bb.shape}")
    return float(np.linalg.norm(aa @ bb, "fro"))

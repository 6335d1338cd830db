"""Truncated two-mode bosonic Fock space and a graded dense operator algebra.

The Hilbert space is spanned by occupation states ``|n1, n2>`` with total
quanta ``n = n1 + n2 <= n_max``.  All operators are dense complex matrices
carrying *grade* metadata: upper bounds on how far they raise or lower the
total quantum number.  Products of hard-truncated matrices are exact on a
guarded block of the basis (columns far enough below the cutoff that no
intermediate state was clipped), which is what makes every identity check
in this package truncation-exact rather than merely approximate.

Conventions: hbar = 1, sphere radius a = 1.  Basis ordering is grouped by
total n ascending, n1 descending inside each group, so exported matrices
are bit-comparable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "BasisMismatchError",
    "SingularDiagonalError",
    "FockState",
    "FockBasis",
    "LinOp",
    "VecOp",
    "GuardedSubspace",
    "ladder",
    "commutator",
    "diag_S_fn",
    "fused_apply",
    "cross",
    "dot",
    "guarded_subspace",
    "residual",
]


class BasisMismatchError(ValueError):
    """Raised when operands of the operator algebra live on different bases."""


class SingularDiagonalError(ValueError):
    """Raised when a diagonal function of S is singular at an occurring level.

    Carries the offending total quantum number in ``total_n``.
    """

    def __init__(self, total_n: int, detail: str = ""):
        self.total_n = total_n
        msg = f"function of S is singular at total n = {total_n} (S = {(total_n + 1) / 2})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


@dataclass(frozen=True)
class FockState:
    """Occupation numbers of the two bosonic modes."""

    n1: int
    n2: int

    @property
    def total(self) -> int:
        return self.n1 + self.n2


class FockBasis:
    """Enumeration of two-mode occupation states with ``n1 + n2 <= n_max``.

    States are ordered by total n ascending and, inside each total-n group,
    by n1 descending.  The ordering is deterministic and part of the public
    contract (matrix exports rely on it).
    """

    def __init__(self, n_max: int):
        if n_max < 2:
            raise ValueError(
                f"n_max must be >= 2 (got {n_max}); smaller spaces leave no room "
                "for the quadratic raising operators"
            )
        self.n_max = int(n_max)
        occ = []
        for n in range(self.n_max + 1):
            for n1 in range(n, -1, -1):
                occ.append((n1, n - n1))
        self.occupations = np.array(occ, dtype=np.int64)
        self.occupations.setflags(write=False)
        self.totals = self.occupations.sum(axis=1)
        self.totals.setflags(write=False)
        self.dim = len(occ)
        self._index = {s: i for i, s in enumerate(occ)}

    def index_of(self, n1: int, n2: int) -> int:
        try:
            return self._index[(n1, n2)]
        except KeyError:
            raise ValueError(
                f"state |{n1},{n2}> is not in the basis (n_max = {self.n_max})"
            ) from None

    def state(self, index: int) -> FockState:
        n1, n2 = self.occupations[index]
        return FockState(int(n1), int(n2))

    def states(self) -> Iterable[FockState]:
        return (self.state(i) for i in range(self.dim))

    def basis_vector(self, n1: int, n2: int) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.index_of(n1, n2)] = 1.0
        return vec

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other) -> bool:
        return isinstance(other, FockBasis) and other.n_max == self.n_max

    def __hash__(self) -> int:
        return hash(("FockBasis", self.n_max))

    def __repr__(self) -> str:
        return f"FockBasis(n_max={self.n_max}, dim={self.dim})"


def _check_same_basis(a: "LinOp", b: "LinOp") -> None:
    if a.basis != b.basis:
        raise BasisMismatchError(
            f"operands live on different bases: {a.basis!r} vs {b.basis!r}"
        )


@dataclass(frozen=True)
class LinOp:
    """Dense complex matrix on a FockBasis with grade metadata.

    ``grade_up`` / ``grade_down`` bound how far the operator raises/lowers
    the total quantum number: every nonzero entry ``<n'|O|n>`` satisfies
    ``-grade_down <= n' - n <= grade_up``.  The metadata is an upper bound;
    it propagates through the algebra (sums for products, max for sums,
    swapped by the adjoint) and is tightened only where a constructor knows
    the exact band.
    """

    basis: FockBasis
    matrix: np.ndarray
    grade_up: int
    grade_down: int

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=complex)
        if m.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(
                f"matrix shape {m.shape} does not match basis dim {self.basis.dim}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    # -- algebra ---------------------------------------------------------

    def __add__(self, other: "LinOp") -> "LinOp":
        _check_same_basis(self, other)
        return LinOp(self.basis, self.matrix + other.matrix,
                     max(self.grade_up, other.grade_up),
                     max(self.grade_down, other.grade_down))

    def __sub__(self, other: "LinOp") -> "LinOp":
        _check_same_basis(self, other)
        return LinOp(self.basis, self.matrix - other.matrix,
                     max(self.grade_up, other.grade_up),
                     max(self.grade_down, other.grade_down))

    def __neg__(self) -> "LinOp":
        return LinOp(self.basis, -self.matrix, self.grade_up, self.grade_down)

    def __mul__(self, scalar) -> "LinOp":
        return LinOp(self.basis, self.matrix * complex(scalar),
                     self.grade_up, self.grade_down)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "LinOp":
        return self * (1.0 / complex(scalar))

    def __matmul__(self, other: "LinOp") -> "LinOp":
        _check_same_basis(self, other)
        return LinOp(self.basis, self.matrix @ other.matrix,
                     self.grade_up + other.grade_up,
                     self.grade_down + other.grade_down)

    def adjoint(self) -> "LinOp":
        return LinOp(self.basis, self.matrix.conj().T,
                     self.grade_down, self.grade_up)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(vec, dtype=complex)

    # -- metadata and predicates ------------------------------------------

    def tighten(self) -> "LinOp":
        """Return a copy whose grade band is the measured band of the matrix."""
        rows, cols = np.nonzero(self.matrix)
        if len(rows) == 0:
            return LinOp(self.basis, self.matrix, 0, 0)
        diff = self.basis.totals[rows] - self.basis.totals[cols]
        up = int(max(diff.max(), 0))
        down = int(max(-diff.min(), 0))
        return LinOp(self.basis, self.matrix, up, down)

    def grade_is_sound(self) -> bool:
        """True if no nonzero entry falls outside the declared grade band."""
        rows, cols = np.nonzero(self.matrix)
        if len(rows) == 0:
            return True
        diff = self.basis.totals[rows] - self.basis.totals[cols]
        return bool(diff.max() <= self.grade_up and -diff.min() <= self.grade_down)

    def is_hermitian(self, tol: float = 1e-13) -> bool:
        return bool(np.abs(self.matrix - self.matrix.conj().T).max() <= tol)

    @property
    def grade_width(self) -> int:
        return self.grade_up + self.grade_down

    @classmethod
    def identity(cls, basis: FockBasis) -> "LinOp":
        return cls(basis, np.eye(basis.dim, dtype=complex), 0, 0)

    @classmethod
    def zero(cls, basis: FockBasis) -> "LinOp":
        return cls(basis, np.zeros((basis.dim, basis.dim), dtype=complex), 0, 0)

    def __repr__(self) -> str:
        return (f"LinOp(dim={self.basis.dim}, grade=(+{self.grade_up},"
                f"-{self.grade_down}))")


@dataclass(frozen=True)
class VecOp:
    """Ordered triple of LinOp components (x, y, z) on one shared basis."""

    x: LinOp
    y: LinOp
    z: LinOp

    def __post_init__(self):
        _check_same_basis(self.x, self.y)
        _check_same_basis(self.x, self.z)

    @property
    def basis(self) -> FockBasis:
        return self.x.basis

    @property
    def components(self) -> tuple[LinOp, LinOp, LinOp]:
        return (self.x, self.y, self.z)

    def __getitem__(self, i: int) -> LinOp:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __add__(self, other: "VecOp") -> "VecOp":
        return VecOp(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "VecOp") -> "VecOp":
        return VecOp(self.x - other.x, self.y - other.y, self.z - other.z)

    def __mul__(self, scalar) -> "VecOp":
        return VecOp(self.x * scalar, self.y * scalar, self.z * scalar)

    __rmul__ = __mul__

    def adjoint(self) -> "VecOp":
        return VecOp(self.x.adjoint(), self.y.adjoint(), self.z.adjoint())

    def tighten(self) -> "VecOp":
        return VecOp(self.x.tighten(), self.y.tighten(), self.z.tighten())


def ladder(basis: FockBasis, mode: int, kind: str) -> LinOp:
    """Single-mode ladder operator as a dense matrix.

    ``kind="lower"`` gives a|n> = sqrt(n)|n-1> on the selected mode;
    ``kind="raise"`` gives its adjoint, with matrix elements that would
    leave the truncated basis set to zero (hard truncation).
    """
    if mode not in (1, 2):
        raise ValueError(f"mode must be 1 or 2, got {mode}")
    if kind not in ("lower", "raise"):
        raise ValueError(f"kind must be 'lower' or 'raise', got {kind!r}")
    m = np.zeros((basis.dim, basis.dim), dtype=complex)
    col = 0 if mode == 1 else 1
    for j in range(basis.dim):
        n1, n2 = basis.occupations[j]
        occ = int(n1) if mode == 1 else int(n2)
        if occ > 0:
            target = (n1 - 1, n2) if mode == 1 else (n1, n2 - 1)
            m[basis.index_of(*target), j] = np.sqrt(occ)
    lower = LinOp(basis, m, 0, 1)
    if kind == "lower":
        return lower
    return lower.adjoint()


def commutator(a: LinOp, b: LinOp) -> LinOp:
    """[a, b] = ab - ba."""
    return a @ b - b @ a


def _eval_S_function(f: Callable[[float], complex], total_n: int) -> complex:
    s = (total_n + 1) / 2.0
    try:
        with np.errstate(divide="raise", invalid="raise", over="raise"):
            value = complex(f(s))
    except (ZeroDivisionError, FloatingPointError) as exc:
        raise SingularDiagonalError(total_n, str(exc)) from None
    if not (np.isfinite(value.real) and np.isfinite(value.imag)):
        raise SingularDiagonalError(total_n, f"value {value!r}")
    return value


def diag_S_fn(basis: FockBasis, f: Callable[[float], complex]) -> LinOp:
    """Diagonal operator f(S), with S = (n + 1)/2 on total-number-n states.

    A singular value of ``f`` at any occurring level is an error naming the
    offending n, never a silent zero; compositions that avoid a singularity
    must go through :func:`fused_apply` instead.
    """
    by_n = {n: _eval_S_function(f, n) for n in range(basis.n_max + 1)}
    values = np.array([by_n[int(n)] for n in basis.totals], dtype=complex)
    return LinOp(basis, np.diag(values), 0, 0)


def fused_apply(f: Callable[[float], complex], monomial: LinOp,
                side: str = "left") -> LinOp:
    """Multiply a monomial by a function of S without materializing f(S).

    For ``side="left"`` the result has entries ``f((n'+1)/2) <n'|M|n>`` with
    n' the row total; f is evaluated only at rows the monomial actually
    reaches, so a factor singular at a level the monomial skips (after a
    grade shift) is perfectly legal.  ``side="right"`` evaluates f at column
    totals instead.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    basis = monomial.basis
    m = monomial.matrix
    axis_totals = basis.totals
    if side == "left":
        present = np.nonzero(np.abs(m).sum(axis=1))[0]
    else:
        present = np.nonzero(np.abs(m).sum(axis=0))[0]
    values = np.zeros(basis.dim, dtype=complex)
    for n in sorted({int(axis_totals[i]) for i in present}):
        values[axis_totals == n] = _eval_S_function(f, n)
    if side == "left":
        out = values[:, None] * m
    else:
        out = m * values[None, :]
    return LinOp(basis, out, monomial.grade_up, monomial.grade_down)


def cross(u: VecOp, v: VecOp) -> VecOp:
    """Operator cross product, (u x v)_i = eps_ijk u_j v_k, u left of v."""
    _check_same_basis(u.x, v.x)
    return VecOp(
        u.y @ v.z - u.z @ v.y,
        u.z @ v.x - u.x @ v.z,
        u.x @ v.y - u.y @ v.x,
    )


def dot(u: VecOp, v: VecOp) -> LinOp:
    """Operator dot product, sum_i u_i v_i, u left of v."""
    _check_same_basis(u.x, v.x)
    return u.x @ v.x + u.y @ v.y + u.z @ v.z


@dataclass(frozen=True)
class GuardedSubspace:
    """State indices trusted for an expression of a given grade width."""

    basis: FockBasis
    width: int
    indices: np.ndarray
    warning: bool = False

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def is_empty(self) -> bool:
        return self.size == 0


def guarded_subspace(basis: FockBasis, width: int) -> GuardedSubspace:
    """All state indices with total n <= n_max - width.

    A width larger than n_max yields an empty subspace with the warning
    flag set rather than an error.
    """
    if width < 0:
        raise ValueError(f"width must be nonnegative, got {width}")
    indices = np.where(basis.totals <= basis.n_max - width)[0]
    return GuardedSubspace(basis, width, indices, warning=len(indices) == 0)


def _as_indices(subspace) -> np.ndarray:
    if isinstance(subspace, GuardedSubspace):
        return subspace.indices
    return np.asarray(subspace, dtype=np.int64)


def residual(expr: LinOp, reference: LinOp, subspace,
             scale: LinOp | None = None) -> float:
    """Relative deviation of ``expr`` from ``reference`` on a guarded block.

    Returns ``max |<i|(expr - reference)|j>|`` over i, j in the subspace,
    divided by ``1 + max |<i|reference|j>|`` over the same block.  When
    ``scale`` is given its block maximum replaces the reference maximum in
    the denominator; that is the backward-error normalization used for
    expressions whose constituent products are exponentially larger than
    the identity they cancel down to.

    An empty subspace yields NaN.
    """
    _check_same_basis(expr, reference)
    idx = _as_indices(subspace)
    if len(idx) == 0:
        return float("nan")
    block = np.ix_(idx, idx)
    num = np.abs(expr.matrix[block] - reference.matrix[block]).max()
    if scale is None:
        den = 1.0 + np.abs(reference.matrix[block]).max()
    else:
        _check_same_basis(expr, scale)
        den = 1.0 + np.abs(scale.matrix[block]).max()
    return float(num / den)

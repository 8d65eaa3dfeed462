"""Core types and operations for dense multi-qubit unitary matrices.

Conventions used throughout the package:

* An n-qubit operator is a dense 2**n x 2**n complex matrix over basis
  states indexed 0 .. 2**n - 1.
* In tensor products the first factor owns the most significant bits of
  the basis index: ``tensor(a, b)`` sends basis state i of ``a`` and j of
  ``b`` to index ``i * b.dim + j`` (plain ``np.kron`` order).
* Unitarity always means ``max |m^H m - I| <= tol`` entrywise, with the
  global default ``UNITARITY_TOL = 1e-10`` (headroom for a handful of
  matrix products in double precision); callers may override per call.
* All randomness flows through numpy's PCG64 bit generator with explicit
  integer seeds, so every sample is reproducible bit for bit.  Derived
  streams (per-restart, per-instance) are produced by hashing the parts
  through ``numpy.random.SeedSequence`` -- see :func:`derive_seed`.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass
from pathlib import Path

import numpy as np

UNITARITY_TOL = 1e-10

_MASK64 = (1 << 64) - 1


class MatrixFormatError(ValueError):
    """Raised when a matrix text file does not follow the expected format."""


class NonUnitaryError(ValueError):
    """Raised when a matrix fails the unitarity check.

    Attributes:
        max_deviation: largest entry magnitude of ``m^H m - I``.
    """

    def __init__(self, max_deviation: float):
        super().__init__(
            f"matrix is not unitary: max |m^H m - I| = {max_deviation:.6e}"
        )
        self.max_deviation = max_deviation


def unitarity_deviation(m) -> float:
    """Largest entry magnitude of ``m^H m - I`` for a square matrix."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    d = m.conj().T @ m - np.eye(m.shape[0])
    return float(np.abs(d).max())


def is_unitary(m, tol: float = UNITARITY_TOL) -> bool:
    """True iff the square matrix ``m`` satisfies ``max |m^H m - I| <= tol``."""
    return unitarity_deviation(m) <= tol


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class UnitaryOperator:
    """An n-qubit unitary as an immutable dense 2**n x 2**n matrix."""

    num_qubits: int
    entries: np.ndarray
    tol: InitVar[float] = UNITARITY_TOL

    def __post_init__(self, tol: float):
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        entries = np.array(self.entries, dtype=complex)
        dim = 2 ** self.num_qubits
        if entries.shape != (dim, dim):
            raise ValueError(
                f"{self.num_qubits}-qubit operator needs shape ({dim}, {dim}), "
                f"got {entries.shape}"
            )
        dev = unitarity_deviation(entries)
        if dev > tol:
            raise NonUnitaryError(dev)
        object.__setattr__(self, "entries", _readonly(entries))

    @property
    def dim(self) -> int:
        return 2 ** self.num_qubits

    @classmethod
    def from_matrix(cls, m, tol: float = UNITARITY_TOL) -> "UnitaryOperator":
        """Wrap a raw square matrix, inferring the qubit count from its size."""
        m = np.asarray(m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        dim = m.shape[0]
        n = int(dim).bit_length() - 1
        if dim < 2 or 2 ** n != dim:
            raise ValueError(f"matrix dimension {dim} is not a power of two >= 2")
        return cls(n, m, tol)


@dataclass(frozen=True, eq=False)
class LocalUnitaryProduct:
    """An ordered list of single-qubit unitaries; expands to their Kronecker product."""

    factors: tuple
    tol: InitVar[float] = UNITARITY_TOL

    def __post_init__(self, tol: float):
        if len(self.factors) < 1:
            raise ValueError("need at least one factor")
        checked = []
        for k, f in enumerate(self.factors):
            f = np.array(f, dtype=complex)
            if f.shape != (2, 2):
                raise ValueError(f"factor {k} has shape {f.shape}, expected (2, 2)")
            dev = unitarity_deviation(f)
            if dev > tol:
                raise NonUnitaryError(dev)
            checked.append(_readonly(f))
        object.__setattr__(self, "factors", tuple(checked))

    @property
    def num_qubits(self) -> int:
        return len(self.factors)

    @classmethod
    def identity(cls, num_qubits: int) -> "LocalUnitaryProduct":
        return cls(tuple(np.eye(2, dtype=complex) for _ in range(num_qubits)))


_METRIC_VARIANTS = ("frobenius", "opnorm")


@dataclass(frozen=True)
class MetricKind:
    """A distance on matrices: Frobenius norm or operator (spectral) norm.

    ``normalized`` divides Frobenius distances by sqrt(dim) so they do not
    grow with the embedding dimension; it has no effect on the operator norm.
    """

    variant: str
    normalized: bool = False

    def __post_init__(self):
        if self.variant not in _METRIC_VARIANTS:
            raise ValueError(
                f"unknown metric variant {self.variant!r}; expected one of {_METRIC_VARIANTS}"
            )

    def label(self) -> str:
        if self.variant == "frobenius" and self.normalized:
            return "frobenius-normalized"
        return self.variant


FROBENIUS = MetricKind("frobenius")
FROBENIUS_NORMALIZED = MetricKind("frobenius", normalized=True)
OPERATOR_NORM = MetricKind("opnorm")


# ---------------------------------------------------------------------------
# Operations

def tensor(a: UnitaryOperator, b: UnitaryOperator) -> UnitaryOperator:
    """Kronecker product; the first operand owns the most significant qubits."""
    return UnitaryOperator(a.num_qubits + b.num_qubits, np.kron(a.entries, b.entries))


def compose(u: UnitaryOperator, v: UnitaryOperator) -> UnitaryOperator:
    """Matrix product u @ v (v acts first)."""
    if u.num_qubits != v.num_qubits:
        raise ValueError(
            f"cannot compose operators on {u.num_qubits} and {v.num_qubits} qubits"
        )
    return UnitaryOperator(u.num_qubits, u.entries @ v.entries)


def matrix_distance(metric: MetricKind, a: np.ndarray, b: np.ndarray) -> float:
    """Metric distance between two raw matrices of equal shape."""
    diff = a - b
    if metric.variant == "frobenius":
        val = float(np.linalg.norm(diff))
        if metric.normalized:
            val /= float(np.sqrt(a.shape[0]))
        return val
    # operator norm = largest singular value of the difference
    return float(np.linalg.svd(diff, compute_uv=False)[0])


def distance(metric: MetricKind, u: UnitaryOperator, v: UnitaryOperator) -> float:
    """Distance between two operators on the same number of qubits."""
    if u.num_qubits != v.num_qubits:
        raise ValueError(
            f"dimension mismatch: {u.num_qubits} vs {v.num_qubits} qubits"
        )
    return matrix_distance(metric, u.entries, v.entries)


def haar_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    """One Haar-distributed dim x dim unitary drawn from ``rng``.

    Ginibre matrix + QR, with each column of Q multiplied by the phase of the
    matching diagonal entry of R.  Plain QR is *not* Haar distributed: the
    factorization is only unique up to those phases and LAPACK's choice
    biases the result; the correction removes the bias exactly.
    """
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    z /= np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_random_unitary(num_qubits: int, seed: int) -> UnitaryOperator:
    """Seeded Haar-random n-qubit unitary; identical bits for identical seeds."""
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    rng = np.random.Generator(np.random.PCG64(int(seed) & _MASK64))
    return UnitaryOperator(num_qubits, haar_matrix(2 ** num_qubits, rng))


def derive_seed(*parts: int) -> int:
    """Deterministic 64-bit child seed from integer parts (SeedSequence hash)."""
    ss = np.random.SeedSequence([int(p) & _MASK64 for p in parts])
    return int(ss.generate_state(1, np.uint64)[0])


_SQ2 = 1.0 / np.sqrt(2.0)

_GATE_TABLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
    "SQRT_SWAP": np.array(
        [
            [1, 0, 0, 0],
            [0, (1 + 1j) / 2, (1 - 1j) / 2, 0],
            [0, (1 - 1j) / 2, (1 + 1j) / 2, 0],
            [0, 0, 0, 1],
        ],
        dtype=complex,
    ),
}


def standard_gate(name: str) -> UnitaryOperator:
    """Textbook matrix for a named gate: CNOT, CZ, SWAP, SQRT_SWAP, H, X, Y, Z, I."""
    key = name.strip().upper()
    if key not in _GATE_TABLE:
        raise ValueError(
            f"unknown gate name {name!r}; expected one of {sorted(_GATE_TABLE)}"
        )
    mat = _GATE_TABLE[key]
    n = int(mat.shape[0]).bit_length() - 1
    return UnitaryOperator(n, mat)


def identity_operator(num_qubits: int) -> UnitaryOperator:
    return UnitaryOperator(num_qubits, np.eye(2 ** num_qubits, dtype=complex))


# ---------------------------------------------------------------------------
# Matrix text format
#
# Line 1: the qubit count n.  Then 2**n lines, each with 2**n whitespace
# separated entries written as ``re,im`` at 17 significant digits.  Lines
# starting with ``#`` are comments and are ignored.

def write_matrix_text(u: UnitaryOperator, path) -> None:
    lines = [str(u.num_qubits)]
    for row in u.entries:
        lines.append(" ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_matrix_text(path) -> tuple[int, np.ndarray]:
    """Parse a matrix text file; returns (num_qubits, matrix).

    Raises MatrixFormatError on any structural problem.  The matrix is *not*
    checked for unitarity here; wrap it in :class:`UnitaryOperator` to apply
    the tolerance policy of your choice.
    """
    try:
        text = Path(path).read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise MatrixFormatError(f"cannot read {path}: {exc}") from exc

    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise MatrixFormatError(f"{path}: empty file")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: first line must be the qubit count") from exc
    if n < 1:
        raise MatrixFormatError(f"{path}: qubit count must be >= 1, got {n}")
    dim = 2 ** n
    rows = lines[1:]
    if len(rows) != dim:
        raise MatrixFormatError(f"{path}: expected {dim} rows, found {len(rows)}")
    out = np.empty((dim, dim), dtype=complex)
    for i, row in enumerate(rows):
        tokens = row.split()
        if len(tokens) != dim:
            raise MatrixFormatError(
                f"{path}: row {i} has {len(tokens)} entries, expected {dim}"
            )
        for j, tok in enumerate(tokens):
            parts = tok.split(",")
            if len(parts) != 2:
                raise MatrixFormatError(f"{path}: bad entry {tok!r} at row {i}")
            try:
                out[i, j] = complex(float(parts[0]), float(parts[1]))
            except ValueError as exc:
                raise MatrixFormatError(
                    f"{path}: bad entry {tok!r} at row {i}"
                ) from exc
    return n, out

"""Pauli-string algebra for Hermitian observables.

Observables are weighted sums of tensor products of single-qubit Pauli
matrices. Realization is dense; strings made of I/Z only take a diagonal
fast path. Convention: qubit 0 is the most significant bit of the
computational-basis index, i.e. the kron order is axes[0] (x) axes[1] (x) ...
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, QubitCapError

DEFAULT_QUBIT_CAP = 12

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

_DIAG_LETTERS = {"I": np.array([1.0, 1.0]), "Z": np.array([1.0, -1.0])}


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, one letter per qubit."""

    axes: str

    def __post_init__(self):
        if len(self.axes) < 1:
            raise ValueError("a Pauli string needs at least one qubit")
        bad = set(self.axes) - set("IXYZ")
        if bad:
            raise ValueError(f"unknown Pauli letters {sorted(bad)} in {self.axes!r}")

    @property
    def nqubits(self) -> int:
        return len(self.axes)

    @property
    def is_diagonal(self) -> bool:
        return set(self.axes) <= {"I", "Z"}

    @property
    def support(self) -> tuple[int, ...]:
        """Qubits on which the string acts non-trivially."""
        return tuple(q for q, a in enumerate(self.axes) if a != "I")


def _merge_terms(terms) -> tuple[tuple[float, PauliString], ...]:
    acc: dict[str, float] = {}
    for coeff, string in terms:
        acc[string.axes] = acc.get(string.axes, 0.0) + float(coeff)
    # Lexicographic order over axis letters gives a deterministic serialization.
    return tuple(
        (c, PauliString(a)) for a, c in sorted(acc.items()) if c != 0.0
    )


@dataclass(frozen=True)
class PauliSum:
    """Real-weighted sum of Pauli strings on a fixed register; always Hermitian.

    Duplicate strings are merged exactly (no epsilon) on construction and
    terms are kept in lexicographic order, so equal operators compare equal.
    """

    terms: tuple[tuple[float, PauliString], ...]
    nqubits: int

    def __post_init__(self):
        merged = _merge_terms(self.terms)
        for _, string in merged:
            if string.nqubits != self.nqubits:
                raise DimensionMismatchError(
                    f"string {string.axes!r} does not match register size {self.nqubits}"
                )
        object.__setattr__(self, "terms", merged)

    @classmethod
    def from_terms(cls, terms, nqubits: int | None = None) -> "PauliSum":
        """Build from an iterable of (coefficient, axes-or-PauliString) pairs."""
        normalized = []
        for coeff, string in terms:
            if not isinstance(string, PauliString):
                string = PauliString(string)
            normalized.append((float(coeff), string))
        if nqubits is None:
            if not normalized:
                raise ValueError("nqubits is required for an empty term list")
            nqubits = normalized[0][1].nqubits
        return cls(tuple(normalized), nqubits)

    @property
    def is_diagonal(self) -> bool:
        return all(s.is_diagonal for _, s in self.terms)

    def __mul__(self, scalar: float) -> "PauliSum":
        return PauliSum(tuple((c * scalar, s) for c, s in self.terms), self.nqubits)

    __rmul__ = __mul__

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.nqubits != self.nqubits:
            raise DimensionMismatchError("cannot add sums on different registers")
        return PauliSum(self.terms + other.terms, self.nqubits)


def _check_cap(nqubits: int, cap: int) -> None:
    if nqubits > cap:
        raise QubitCapError(f"{nqubits} qubits exceeds the dense cap of {cap}")


def _string_matrix(string: PauliString) -> np.ndarray:
    out = PAULI_MATRICES[string.axes[0]]
    for letter in string.axes[1:]:
        out = np.kron(out, PAULI_MATRICES[letter])
    return out


def _string_diagonal(string: PauliString) -> np.ndarray:
    out = _DIAG_LETTERS[string.axes[0]]
    for letter in string.axes[1:]:
        out = np.kron(out, _DIAG_LETTERS[letter])
    return out


@functools.lru_cache(maxsize=32)
def _realize_cached(psum: PauliSum, cap: int) -> np.ndarray:
    _check_cap(psum.nqubits, cap)
    dim = 2 ** psum.nqubits
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, string in psum.terms:
        out += coeff * _string_matrix(string)
    out.flags.writeable = False
    return out


@functools.lru_cache(maxsize=32)
def _realize_diagonal_cached(psum: PauliSum, cap: int) -> np.ndarray:
    _check_cap(psum.nqubits, cap)
    out = np.zeros(2 ** psum.nqubits)
    for coeff, string in psum.terms:
        out += coeff * _string_diagonal(string)
    out.flags.writeable = False
    return out


def realize(psum: PauliSum, cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    """Dense Hermitian matrix of the weighted sum (read-only, cached)."""
    return _realize_cached(psum, cap)


def realize_diagonal(psum: PauliSum, cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    """Diagonal of an I/Z-only sum as a real vector (read-only, cached)."""
    if not psum.is_diagonal:
        raise ValueError("sum contains X/Y letters; no diagonal realization")
    return _realize_diagonal_cached(psum, cap)


def op_norm_inf(psum: PauliSum, cap: int = DEFAULT_QUBIT_CAP) -> float:
    """Largest absolute eigenvalue (operator infinity norm)."""
    if not psum.terms:
        return 0.0
    if psum.is_diagonal:
        return float(np.abs(realize_diagonal(psum, cap)).max())
    evals = np.linalg.eigvalsh(realize(psum, cap))
    return float(max(abs(evals[0]), abs(evals[-1])))


def min_eigenvalue(psum: PauliSum, cap: int = DEFAULT_QUBIT_CAP) -> float:
    """Smallest eigenvalue by exact diagonalization (diagonal fast path)."""
    if not psum.terms:
        return 0.0
    if psum.is_diagonal:
        return float(realize_diagonal(psum, cap).min())
    return float(np.linalg.eigvalsh(realize(psum, cap))[0])


def format_pauli_sum(psum: PauliSum) -> str:
    """Text form, one `<coefficient> <letters>` term per line."""
    return "\n".join("%.17g %s" % (c, s.axes) for c, s in psum.terms)


def parse_pauli_sum(text: str, nqubits: int | None = None) -> PauliSum:
    """Parse the text form produced by :func:`format_pauli_sum`."""
    terms = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected '<coefficient> <letters>'")
        try:
            coeff = float(parts[0])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad coefficient {parts[0]!r}") from exc
        terms.append((coeff, PauliString(parts[1])))
    return PauliSum.from_terms(terms, nqubits=nqubits)

"""Small dense complex linear algebra for kets, operators and channels.

Kets and operators are plain complex ``numpy`` arrays. Everything here is
sized for the Hilbert spaces this package needs (dimension 6 at most), so no
attempt is made at sparse or symbolic storage.

Index convention: in a tensor product the first factor is the most
significant index (Alice first, then Bob). Bob's three-dimensional space is
ordered ``(|0_x>, |1_x>, |V>)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_DIM = 6
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_FLOOR = -1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def ket(amplitudes: Iterable[complex]) -> np.ndarray:
    """Column vector as a read-only 1-d complex array."""
    v = _frozen(list(amplitudes))
    if v.ndim != 1 or not 1 <= v.size <= MAX_DIM:
        raise ValueError(f"ket must be 1-d with 1..{MAX_DIM} entries, got shape {v.shape}")
    return v


def basis(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return _frozen(v)


def projector(v: np.ndarray) -> np.ndarray:
    """``|v><v|`` (no normalization is applied)."""
    v = np.asarray(v, dtype=complex)
    return _frozen(np.outer(v, v.conj()))


def outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``|a><b|``."""
    return _frozen(np.outer(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex).conj()))


def identity(dim: int) -> np.ndarray:
    return _frozen(np.eye(dim))


def adjoint(a: np.ndarray) -> np.ndarray:
    return _frozen(np.asarray(a).conj().T)


def norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def inner(a: np.ndarray, b: np.ndarray) -> complex:
    """``<a|b>``, conjugate-linear in the first argument."""
    return complex(np.vdot(a, b))


def tensor(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product, first factor most significant.

    Works for kets (1-d) and operators (2-d) alike.
    """
    if not factors:
        raise ValueError("tensor needs at least one factor")
    out = np.asarray(factors[0], dtype=complex)
    for f in factors[1:]:
        out = np.kron(out, np.asarray(f, dtype=complex))
    return _frozen(out)


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and float(np.max(np.abs(a - a.conj().T))) <= tol


def min_eigenvalue(a: np.ndarray) -> float:
    a = np.asarray(a)
    return float(np.linalg.eigvalsh((a + a.conj().T) / 2).min())


def is_psd(a: np.ndarray, floor: float = PSD_FLOOR) -> bool:
    return is_hermitian(a, tol=1e-10) and min_eigenvalue(a) >= floor


def sqrtm_psd(a: np.ndarray) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix."""
    w, v = np.linalg.eigh((np.asarray(a) + np.asarray(a).conj().T) / 2)
    if w.min() < PSD_FLOOR:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return _frozen((v * np.sqrt(w)) @ v.conj().T)


def inv_sqrtm_pd(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((np.asarray(a) + np.asarray(a).conj().T) / 2)
    if w.min() <= 0:
        raise ValueError("matrix is not positive definite")
    return _frozen((v / np.sqrt(w)) @ v.conj().T)


@dataclass(frozen=True)
class QuantumOperation:
    """Completely positive map given by its operation elements.

    Each element maps the ``dim_in``-dimensional input space to the
    ``dim_out``-dimensional output space.
    """

    elements: tuple[np.ndarray, ...]

    def __init__(self, elements: Sequence[np.ndarray]):
        elems = tuple(_frozen(k) for k in elements)
        if not elems:
            raise ValueError("a quantum operation needs at least one element")
        shape = elems[0].shape
        for k in elems:
            if k.ndim != 2 or k.shape != shape:
                raise ValueError("all operation elements must be matrices of the same shape")
            if max(k.shape) > MAX_DIM:
                raise ValueError(f"dimension exceeds {MAX_DIM}")
        object.__setattr__(self, "elements", elems)

    @property
    def dim_in(self) -> int:
        return self.elements[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.elements[0].shape[0]

    def completeness(self) -> np.ndarray:
        """``sum_k K^dag K``; the identity for a trace-preserving map."""
        return sum(k.conj().T @ k for k in self.elements)

    def trace_deviation(self) -> float:
        return float(np.max(np.abs(self.completeness() - np.eye(self.dim_in))))

    def is_trace_preserving(self, tol: float = TRACE_TOL) -> bool:
        return self.trace_deviation() <= tol

    def extend_left(self, dim: int) -> "QuantumOperation":
        """The map ``id_dim (x) self`` acting on a system of dimension ``dim`` first."""
        eye = np.eye(dim)
        return QuantumOperation([np.kron(eye, k) for k in self.elements])


def identity_operation(dim: int) -> QuantumOperation:
    return QuantumOperation([np.eye(dim)])


def apply_operation(op: QuantumOperation, rho: np.ndarray) -> np.ndarray:
    """``sum_k K rho K^dag``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (op.dim_in, op.dim_in):
        raise ValueError(f"dimension mismatch: operation acts on {op.dim_in}, rho is {rho.shape}")
    out = np.zeros((op.dim_out, op.dim_out), dtype=complex)
    for k in op.elements:
        out += k @ rho @ k.conj().T
    return _frozen(out)


def expectation(e: np.ndarray, rho: np.ndarray) -> float:
    """Born-rule value ``Re Tr[E rho]``.

    Raises if the imaginary part is not negligible, which signals a
    non-Hermitian argument.
    """
    e = np.asarray(e)
    rho = np.asarray(rho)
    if e.shape != rho.shape:
        raise ValueError(f"dimension mismatch: {e.shape} vs {rho.shape}")
    val = complex(np.einsum("ij,ji->", e, rho))
    if abs(val.imag) > 1e-10:
        raise ValueError(f"Tr[E rho] has imaginary part {val.imag:.3e}")
    return val.real


SIGMA_X = _frozen([[0, 1], [1, 0]])
SIGMA_Y = _frozen([[0, -1j], [1j, 0]])
SIGMA_Z = _frozen([[1, 0], [0, -1]])
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def embed_qubit_operator(a: np.ndarray) -> np.ndarray:
    """Place a 2x2 operator on the qubit block of Bob's 3-d space (zero on ``|V>``)."""
    out = np.zeros((3, 3), dtype=complex)
    out[:2, :2] = a
    return _frozen(out)


def random_cptp(dim: int, n_elements: int, rng: np.random.Generator) -> QuantumOperation:
    """Random trace-preserving map from complex Gaussian operation elements.

    The raw elements are renormalized by the inverse square root of their
    completeness operator.
    """
    raw = [rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)) for _ in range(n_elements)]
    s = sum(k.conj().T @ k for k in raw)
    fix = inv_sqrtm_pd(s)
    return QuantumOperation([k @ fix for k in raw])

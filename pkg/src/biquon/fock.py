"""Truncated Fock-space engine.

Dense K x K matrices for the ladder operators, the q-mutator, and the
residual probes that quantify how far a truncated pair is from satisfying
the deformed commutation identity.  Truncation necessarily breaks the
identity on the top basis vectors, so every residual check takes a
``safe_dim`` argument restricting it to the leading block.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .qcore import BetaSequence, validate_q_algebraic

__all__ = [
    "TruncatedOperator",
    "make_quon_c",
    "make_identity",
    "qmutator",
    "qmutator_residual",
    "norm_growth_probe",
    "operator_to_csv",
]

DEFAULT_SAFE_MARGIN = 2


@dataclass(frozen=True)
class TruncatedOperator:
    """Dense complex matrix acting on span{e_0, ..., e_{K-1}}."""

    dim: int
    matrix: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=complex)
        if m.shape != (self.dim, self.dim):
            raise ValueError(f"matrix shape {m.shape} does not match dim={self.dim}")
        if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
            raise ValueError("matrix contains non-finite entries")
        object.__setattr__(self, "matrix", m)

    def adjoint(self, label: str | None = None) -> "TruncatedOperator":
        return TruncatedOperator(self.dim, self.matrix.conj().T,
                                 label if label is not None else self.label + "^dag")

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(vec, dtype=complex)

    def __matmul__(self, other: "TruncatedOperator") -> "TruncatedOperator":
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return TruncatedOperator(self.dim, self.matrix @ other.matrix,
                                 f"{self.label}*{other.label}")


def make_quon_c(q: float, dim: int) -> TruncatedOperator:
    """K x K truncation of the lowering operator: entries c[k, k+1] = beta_k.

    Its conjugate transpose is the truncation of the raising operator, so
    c e_m = beta_{m-1} e_{m-1} and c^dag e_n = beta_n e_{n+1} (n < K-1).
    """
    validate_q_algebraic(q)
    if dim < 2:
        raise ValueError(f"dim={dim} must be at least 2")
    bs = BetaSequence(q, dim - 2)
    m = np.zeros((dim, dim), dtype=complex)
    for k in range(dim - 1):
        m[k, k + 1] = bs.beta(k)
    return TruncatedOperator(dim, m, "c")


def make_identity(dim: int) -> TruncatedOperator:
    return TruncatedOperator(dim, np.eye(dim, dtype=complex), "I")


def qmutator(x: TruncatedOperator, y: TruncatedOperator, q: float) -> TruncatedOperator:
    """Deformed bracket [X, Y]_q = XY - q YX."""
    validate_q_algebraic(q)
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    m = x.matrix @ y.matrix - q * (y.matrix @ x.matrix)
    return TruncatedOperator(x.dim, m, f"[{x.label},{y.label}]_q")


def qmutator_residual(x: TruncatedOperator, y: TruncatedOperator, q: float,
                      safe_dim: int | None = None) -> float:
    """max_n || (XY - q YX - I) e_n || over the safe block n < safe_dim.

    The default safe_dim = K - 2 excludes the columns where the truncation
    edge corrupts the identity.
    """
    if safe_dim is None:
        safe_dim = x.dim - DEFAULT_SAFE_MARGIN
    if not (0 < safe_dim < x.dim):
        raise ValueError(f"safe_dim={safe_dim} outside (0, dim={x.dim})")
    r = qmutator(x, y, q).matrix - np.eye(x.dim)
    return float(np.max(np.linalg.norm(r[:, :safe_dim], axis=0)))


def norm_growth_probe(x: TruncatedOperator, family) -> np.ndarray:
    """Lower-bound sequence beta_{n-1}^2 (||phi_{n-1}|| / ||phi_n||)^2 for ||X||^2.

    A bounded sequence is consistent with X being bounded; divergence
    diagnoses unboundedness.  This is a trend probe, not a proof.
    """
    if family.K != x.dim:
        raise ValueError(f"family dim {family.K} does not match operator dim {x.dim}")
    norms = np.linalg.norm(family.phi, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("family contains a zero-norm vector")
    bs = BetaSequence(family.q, family.K)
    b2 = np.array([bs.beta(n - 1) ** 2 for n in range(1, family.K)])
    return b2 * (norms[:-1] / norms[1:]) ** 2


def operator_to_csv(op: TruncatedOperator, stream: IO[str]) -> None:
    """Row-major dump; each cell is the quoted pair "re,im"."""
    writer = csv.writer(stream)
    for row in op.matrix:
        writer.writerow([f"{z.real:.17g},{z.imag:.17g}" for z in row])

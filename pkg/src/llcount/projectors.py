"""Dense complex linear algebra on qudit supports: projector validation,
normalized traces of ordered products, kernel-intersection dimensions and the
spectral gap.

Normalization convention: every dimension, rank and trace is relative to
d^(size of the relevant support), so the full space has normalized dimension 1
and values computed on a local support equal the full-space normalized
values.  Absolute dimensions are recovered by multiplying by d^qudit_count at
the reporting layer.

Embedding convention: qudit indices ascending, row-major composite indexing
(the first qudit of a support is the most significant digit).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NumericFailure, ResourceCapExceeded
from .graphs import DependencyGraph, build_graph

EIG_TOL = 1e-9
IMAG_TOL = 1e-8
DEFAULT_DENSE_CAP = 2 ** 14


@dataclass(frozen=True, eq=False)
class LocalProjector:
    """Hermitian idempotent matrix acting on the listed qudits.

    ``matrix`` has side d^len(support) with row-major composite indexing over
    the sorted support.
    """

    support: tuple[int, ...]
    matrix: np.ndarray


class ProjectorSet:
    """A family of local projectors on a shared qudit register."""

    def __init__(self, d: int, qudit_count: int,
                 projectors: Sequence[LocalProjector],
                 dense_cap: int = DEFAULT_DENSE_CAP):
        if d < 2:
            raise ValueError("local dimension d must be at least 2")
        if qudit_count < 0:
            raise ValueError("qudit_count must be non-negative")
        self.d = d
        self.qudit_count = qudit_count
        self.dense_cap = dense_cap
        cleaned = []
        for i, p in enumerate(projectors):
            support = tuple(sorted(p.support))
            if len(set(support)) != len(support):
                raise ValueError(f"projector {i}: repeated qudit in support")
            if support and not (0 <= support[0] and support[-1] < qudit_count):
                raise ValueError(f"projector {i}: support out of range")
            mat = np.asarray(p.matrix, dtype=np.complex128)
            side = d ** len(support)
            if mat.shape != (side, side):
                raise ValueError(
                    f"projector {i}: matrix shape {mat.shape} does not match "
                    f"d^|support| = {side}")
            cleaned.append(LocalProjector(support, mat))
        self.projectors: tuple[LocalProjector, ...] = tuple(cleaned)

    def __len__(self) -> int:
        return len(self.projectors)


@dataclass(frozen=True)
class ProjectorDiagnostics:
    hermiticity_deviation: float
    idempotency_deviation: float
    spectrum_deviation: float
    passed: bool


def validate_projector(p: LocalProjector, tol: float = 1e-8) -> ProjectorDiagnostics:
    """Check Hermiticity, idempotency and a {0,1} spectrum within tol."""
    m = np.asarray(p.matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"projector matrix must be square, got shape {m.shape}")
    herm = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    idem = float(np.max(np.abs(m @ m - m))) if m.size else 0.0
    if herm <= tol and m.size:
        eig = np.linalg.eigvalsh(m)
        spectrum = float(np.max(np.minimum(np.abs(eig), np.abs(eig - 1.0))))
    else:
        spectrum = float("inf") if herm > tol else 0.0
    passed = herm <= tol and idem <= tol and spectrum <= tol
    return ProjectorDiagnostics(herm, idem, spectrum, passed)


def validate_set(ps: ProjectorSet, tol: float = 1e-8) -> list[ProjectorDiagnostics]:
    return [validate_projector(p, tol) for p in ps.projectors]


def support_dependency_graph(ps: ProjectorSet) -> DependencyGraph:
    """One vertex per projector; an edge iff the supports intersect."""
    supports = [frozenset(p.support) for p in ps.projectors]
    edges = []
    for i in range(len(supports)):
        for j in range(i + 1, len(supports)):
            if supports[i] & supports[j]:
                edges.append((i, j))
    return build_graph(len(supports), edges)


def embed_operator(matrix: np.ndarray, support: Sequence[int],
                   target: Sequence[int], d: int) -> np.ndarray:
    """Embed an operator on ``support`` into the register ``target`` by
    tensoring with identity, respecting the ascending row-major convention."""
    support = tuple(support)
    target = tuple(target)
    if not set(support) <= set(target):
        raise ValueError("support must be contained in the target register")
    s = len(support)
    extra = len(target) - s
    if extra == 0 and support == target:
        return np.asarray(matrix, dtype=np.complex128)
    big = np.kron(np.asarray(matrix, dtype=np.complex128), np.eye(d ** extra))
    # axes of big: [support digits..., extra digits...] for rows and columns;
    # permute so digits follow the target's ascending qudit order.
    pos_in_support = {q: i for i, q in enumerate(support)}
    perm = []
    next_extra = s
    for q in target:
        if q in pos_in_support:
            perm.append(pos_in_support[q])
        else:
            perm.append(next_extra)
            next_extra += 1
    u = len(target)
    tensor = big.reshape([d] * (2 * u))
    tensor = tensor.transpose(perm + [u + a for a in perm])
    return np.ascontiguousarray(tensor.reshape(d ** u, d ** u))


def _union_support(ps: ProjectorSet, indices: Iterable[int]) -> tuple[int, ...]:
    out: set[int] = set()
    for i in indices:
        out.update(ps.projectors[i].support)
    return tuple(sorted(out))


def _check_cap(ps: ProjectorSet, support: Sequence[int]) -> None:
    dim = ps.d ** len(support)
    if dim > ps.dense_cap:
        raise ResourceCapExceeded(
            f"dense dimension d^{len(support)} = {dim} exceeds cap {ps.dense_cap}")


def normalized_product_trace(ps: ProjectorSet, indices: Sequence[int], *,
                             imag_tol: float = IMAG_TOL) -> float:
    """tr of the ordered product of the listed projectors over d^|support union|.

    Factors are embedded on the union support and multiplied in the given
    order (repeats allowed).  The imaginary part must be below tolerance; for
    commuting families it vanishes identically.
    """
    if not indices:
        raise ValueError("product of an empty index list")
    union = _union_support(ps, indices)
    _check_cap(ps, union)
    acc = None
    for i in indices:
        p = ps.projectors[i]
        factor = embed_operator(p.matrix, p.support, union, ps.d)
        acc = factor if acc is None else acc @ factor
    tr = complex(np.trace(acc))
    norm = ps.d ** len(union)
    if abs(tr.imag) > imag_tol * max(1.0, abs(tr)):
        raise NumericFailure(
            f"product trace has imaginary residue {tr.imag:.3e}")
    return tr.real / norm


def rank_normalized(p: LocalProjector, d: int) -> float:
    """Eigenvalue count >= 1/2, over d^|support|."""
    eig = np.linalg.eigvalsh(np.asarray(p.matrix, dtype=np.complex128))
    rank = int(np.sum(eig >= 0.5))
    return rank / (d ** len(p.support))


def kernel_intersection_dim(ps: ProjectorSet, indices: Iterable[int], *,
                            tol: float = EIG_TOL) -> float:
    """Normalized dimension of the intersection of the listed kernels.

    Computed as the null-space dimension of the sum of the projectors on the
    joint support; the empty set gives the full space, i.e. 1.
    """
    indices = tuple(indices)
    if not indices:
        return 1.0
    union = _union_support(ps, indices)
    _check_cap(ps, union)
    dim_union = ps.d ** len(union)
    acc = np.zeros((dim_union, dim_union), dtype=np.complex128)
    for i in indices:
        p = ps.projectors[i]
        acc += embed_operator(p.matrix, p.support, union, ps.d)
    eig = np.linalg.eigvalsh(acc)
    cut = tol * max(1.0, float(eig[-1])) if eig.size else tol
    null_dim = int(np.sum(eig < cut))
    return null_dim / dim_union


def spectral_gap(ps: ProjectorSet, *, tol: float = EIG_TOL) -> float:
    """Smallest nonzero eigenvalue of the sum of all projectors (0 if the sum
    vanishes).  Dense full-space diagonalization; oracle-grade, desk scale."""
    n = ps.qudit_count
    dim = ps.d ** n
    if dim > ps.dense_cap:
        raise ResourceCapExceeded(
            f"full-space dimension {dim} exceeds cap {ps.dense_cap}; "
            "supply a certified lower bound for the gap instead")
    if not ps.projectors:
        return 0.0
    target = tuple(range(n))
    acc = np.zeros((dim, dim), dtype=np.complex128)
    for p in ps.projectors:
        acc += embed_operator(p.matrix, p.support, target, ps.d)
    eig = np.linalg.eigvalsh(acc)
    cut = tol * max(1.0, float(eig[-1]))
    nonzero = eig[eig > cut]
    if nonzero.size == 0:
        return 0.0
    return float(nonzero[0])


def pair_commutes(ps: ProjectorSet, i: int, j: int, tol: float = 1e-8) -> bool:
    """Check the commutator of two projectors on their joint support."""
    union = _union_support(ps, (i, j))
    _check_cap(ps, union)
    a = embed_operator(ps.projectors[i].matrix, ps.projectors[i].support, union, ps.d)
    b = embed_operator(ps.projectors[j].matrix, ps.projectors[j].support, union, ps.d)
    return float(np.max(np.abs(a @ b - b @ a))) <= tol


@dataclass(frozen=True)
class CommutationReport:
    pairs_checked: int
    failures: tuple[tuple[int, int], ...]

    @property
    def commuting(self) -> bool:
        return not self.failures


def verify_commuting(ps: ProjectorSet, tol: float = 1e-8) -> CommutationReport:
    """Check all overlapping pairs; disjoint supports commute trivially."""
    g = support_dependency_graph(ps)
    failures = []
    checked = 0
    for u, v in g.edges():
        checked += 1
        if not pair_commutes(ps, u, v, tol):
            failures.append((u, v))
    return CommutationReport(checked, tuple(failures))

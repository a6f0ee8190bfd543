from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import optimize
from scanpy import logging as logg

from .._errors import EigenSolverError
from .._types import HybridSystem, check_system


@dataclass(frozen=True, eq=False)
class ModeMatrix:
    """Single-excitation coupled-mode matrix (Hz) at one field."""
    field: float
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class BranchDiagram:
    """\
    Polariton branches versus field.

    `branches` has shape (n_fields, dim), ascending along axis 1;
    `composition` has shape (n_fields, dim, dim) with
    `composition[i, k, j]` the weight of bare mode `k` (0 is the cavity) in
    branch `j`; `cavity_weight` is `composition[:, 0, :]`.
    """
    field_values: np.ndarray
    branches: np.ndarray
    composition: np.ndarray

    @property
    def cavity_weight(self) -> np.ndarray:
        return self.composition[:, 0, :]


@dataclass(frozen=True)
class AvoidedCrossing:
    min_gap: float
    field_at_min: float
    at_boundary: bool = False


def _mode_matrices(system: HybridSystem, fields: np.ndarray) -> np.ndarray:
    n = system.dim
    M = np.zeros((fields.size, n, n))
    M[:, 0, 0] = system.cavity.omega_c
    for k, m in enumerate(system.magnons, start=1):
        M[:, k, k] = m.frequency(fields)
        M[:, 0, k] = m.g_tilde
        M[:, k, 0] = m.g_tilde
    return M


def build_mode_matrix(system: HybridSystem, field: float) -> ModeMatrix:
    """\
    Coupled-mode matrix of the cavity and its magnon modes at `field`.

    The diagonal holds the bare frequencies (cavity first, then the magnon
    modes in system order), the first row and column the collective couplings.
    There is no direct magnon-magnon entry.

    Parameters
    ----------
    system
        A valid HybridSystem.
    field
        Static field, T.

    Returns
    -------
    A ModeMatrix with entries in Hz.
    """
    if not np.isfinite(field):
        raise ValueError(f'field must be finite (got {field!r})')
    check_system(system)
    return ModeMatrix(field=float(field), entries=_mode_matrices(system, np.array([field], dtype=float))[0])


def _sorted_eigh(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(matrix)
    weights = v ** 2
    # ties broken by cavity weight, largest first
    order = np.lexsort((-weights[0], w))
    return w[order], weights[:, order]


def polariton_branches(
    system: HybridSystem,
    fields: Sequence[float],
) -> BranchDiagram:
    """\
    Diagonalize the coupled-mode matrix at every field.

    Parameters
    ----------
    system
        A valid HybridSystem.
    fields
        Static field values, T.

    Returns
    -------
    BranchDiagram with ascending branch frequencies (Hz) and the squared
    eigenvector components of every branch.
    """
    fields = np.array(fields, dtype=float, ndmin=1)
    if fields.size == 0:
        raise ValueError('fields must be non-empty')
    if not np.all(np.isfinite(fields)):
        raise ValueError('fields must be finite')
    check_system(system)

    M = _mode_matrices(system, fields)
    branches = np.empty((fields.size, system.dim))
    composition = np.empty((fields.size, system.dim, system.dim))
    for i, B in enumerate(fields):
        try:
            branches[i], composition[i] = _sorted_eigh(M[i])
        except np.linalg.LinAlgError as e:
            raise EigenSolverError(float(B)) from e
    return BranchDiagram(field_values=fields, branches=branches, composition=composition)


def _gap_at(system: HybridSystem, field: float, lo: int, hi: int) -> float:
    w = np.linalg.eigvalsh(_mode_matrices(system, np.array([field], dtype=float))[0])
    return float(w[hi] - w[lo])


def avoided_crossing(
    system: HybridSystem,
    fields: Sequence[float],
    branch_pair: Tuple[int, int] = (0, 1),
) -> AvoidedCrossing:
    """\
    Minimum gap between two polariton branches over a field sweep.

    The discrete minimum is refined by a bounded scalar minimization of the
    eigenvalue gap between the neighbouring fields, so the result does not
    depend on how the sweep samples the crossing.

    Parameters
    ----------
    system
        A valid HybridSystem.
    fields
        Field values spanning the crossing, T. They must be increasing.
    branch_pair
        Indices of the two branches, in the ascending branch order.

    Returns
    -------
    AvoidedCrossing with the gap in Hz, the field of the minimum in T and a
    flag set when the minimum sits on the first or last field.
    """
    lo, hi = sorted(branch_pair)
    if lo < 0 or hi >= system.dim or lo == hi:
        raise ValueError(
            f'branch_pair {branch_pair} is invalid for a system with {system.dim} branches'
        )
    diagram = polariton_branches(system, fields)
    B = diagram.field_values
    if B.size > 1 and np.any(np.diff(B) <= 0):
        raise ValueError('fields must be strictly increasing')
    gap = diagram.branches[:, hi] - diagram.branches[:, lo]
    i = int(np.argmin(gap))

    if i == 0 or i == B.size - 1:
        logg.warning(
            f'Minimum gap between branches {lo} and {hi} is at the edge of the field '
            f'sweep ({B[i]:.6g} T); the sweep may not span the crossing'
        )
        return AvoidedCrossing(min_gap=float(gap[i]), field_at_min=float(B[i]), at_boundary=True)

    x0, x2 = B[i - 1], B[i + 1]
    span = x2 - x0
    # unit interval: the tolerance scales with the field step
    res = optimize.minimize_scalar(
        lambda u: _gap_at(system, x0 + u * span, lo, hi),
        bounds=(0.0, 1.0),
        method='bounded',
        options={'xatol': 1e-12},
    )
    if not res.success or res.fun > gap[i]:
        return AvoidedCrossing(min_gap=float(gap[i]), field_at_min=float(B[i]))
    return AvoidedCrossing(min_gap=float(max(res.fun, 0.0)), field_at_min=float(x0 + res.x * span))

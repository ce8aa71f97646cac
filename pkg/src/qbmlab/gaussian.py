"""Symplectic linear algebra over Gaussian states.

States are zero-mean Gaussian states of M bosonic modes, represented by the
real symmetric 2M x 2M matrix of symmetrized second moments in the
interleaved ordering (x1, p1, x2, p2, ..., xM, pM) with hbar = 1.  In these
units the single-mode vacuum is diag(1/2, 1/2) and every physical state has
all symplectic eigenvalues >= 1/2.

All entropies and the logarithmic negativity are reported in nats.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, OverlapError, PairingFailure, SubsetError

#: Heisenberg tolerance: eigenvalues in [1/2 - NU_TOL, 1/2] are treated as 1/2.
NU_TOL = 1e-9

#: Relative tolerance for collapsing the 2M moduli of Omega.sigma into M pairs.
PAIRING_RTOL = 1e-8

#: Corruption guard: raw inputs with relative asymmetry beyond this are
#: rejected; anything smaller is float noise and is symmetrized away.
SYMMETRY_TOL = 1e-8


def symplectic_form(n_modes: int) -> np.ndarray:
    """Return the canonical commutator matrix Omega for ``n_modes`` modes.

    Block diagonal with 2x2 blocks [[0, 1], [-1, 0]]; satisfies
    Omega @ Omega = -identity and Omega.T = -Omega.
    """
    if n_modes < 1:
        raise DomainError(f"n_modes must be >= 1, got {n_modes}")
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    idx = np.arange(n_modes)
    omega[2 * idx, 2 * idx + 1] = 1.0
    omega[2 * idx + 1, 2 * idx] = -1.0
    return omega


@dataclass(frozen=True)
class ModeSubset:
    """Sorted, duplicate-free set of mode indices within a state."""

    indices: tuple[int, ...]
    complement_size: int

    @classmethod
    def of(cls, indices: Iterable[int], n_modes: int) -> "ModeSubset":
        idx = tuple(sorted(int(i) for i in indices))
        if len(set(idx)) != len(idx):
            raise SubsetError(f"duplicate mode indices in {idx}")
        if idx and (idx[0] < 0 or idx[-1] >= n_modes):
            raise IndexError(f"mode indices {idx} out of range for {n_modes} modes")
        return cls(indices=idx, complement_size=n_modes - len(idx))

    def __len__(self) -> int:
        return len(self.indices)

    def complement(self) -> "ModeSubset":
        n = len(self.indices) + self.complement_size
        rest = tuple(i for i in range(n) if i not in set(self.indices))
        return ModeSubset(indices=rest, complement_size=len(self.indices))


class CovarianceMatrix:
    """Second-moment matrix of an M-mode Gaussian state.

    The constructor symmetrizes its input; asymmetry beyond ``SYMMETRY_TOL``
    (relative to the matrix scale) is rejected as corrupted data.  ``labels``
    carries one identifier per mode; by convention label 0 is the system S
    and labels 1..N are bath oscillators.
    """

    __slots__ = ("n_modes", "data", "labels")

    def __init__(self, data: np.ndarray, labels: Sequence[int] | None = None):
        data = np.asarray(data, dtype=float)
        if data.ndim != 2 or data.shape[0] != data.shape[1] or data.shape[0] % 2:
            raise DomainError(f"covariance matrix must be 2M x 2M, got {data.shape}")
        n_modes = data.shape[0] // 2
        scale = max(float(np.max(np.abs(data))), 1.0)
        defect = float(np.max(np.abs(data - data.T)))
        if defect > SYMMETRY_TOL * scale:
            raise DomainError(f"input matrix asymmetry {defect:.3e} too large to symmetrize")
        self.n_modes = n_modes
        self.data = 0.5 * (data + data.T)
        if labels is None:
            labels = tuple(range(n_modes))
        if len(labels) != n_modes:
            raise DomainError(f"{len(labels)} labels for {n_modes} modes")
        self.labels = tuple(labels)

    def rows_for(self, modes: Sequence[int]) -> np.ndarray:
        """Row/column indices of the (x, p) pairs of the given mode positions."""
        modes = np.asarray(modes, dtype=int)
        return np.column_stack((2 * modes, 2 * modes + 1)).ravel()

    def copy(self) -> "CovarianceMatrix":
        return CovarianceMatrix(self.data.copy(), self.labels)


@dataclass(frozen=True)
class SymplecticSpectrum:
    """Moduli of the paired +-(i nu) eigenvalues of Omega.sigma, ascending."""

    values: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.values)

    @property
    def minimum(self) -> float:
        return float(self.values[0])


@dataclass(frozen=True)
class ValidityReport:
    """Result of :func:`validate_state` (report-only, never raises)."""

    n_modes: int
    min_symplectic: float
    symmetry_defect: float
    passed: bool


def _pair_moduli(moduli: np.ndarray, scale: float) -> np.ndarray:
    """Collapse 2M sorted moduli into M pairs, verifying agreement.

    The pairing test is relative (PAIRING_RTOL) with an absolute floor set by
    the matrix scale: tiny partial-transpose eigenvalues of a large matrix
    carry absolute eigensolver noise, so a purely relative test would reject
    genuine spectra.
    """
    moduli = np.sort(moduli)
    lo = moduli[0::2]
    hi = moduli[1::2]
    tol = PAIRING_RTOL * np.maximum(hi, 1e-300) + 1e-12 * scale
    bad = hi - lo > tol
    if np.any(bad):
        k = int(np.argmax(bad))
        raise PairingFailure(
            f"moduli {lo[k]:.12e} and {hi[k]:.12e} do not pair within tolerance"
        )
    return 0.5 * (lo + hi)


def _spectrum_of(sigma: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues of a raw symmetric matrix, ascending.

    Primary path: Cholesky sigma = L L^T, then the singular values of the
    antisymmetric matrix L^T Omega L equal the symplectic eigenvalues, each
    twice.  This stays accurate (absolute error ~ eps * ||sigma||) even for
    strongly squeezed states where the nonsymmetric eigensolve of
    Omega.sigma loses several digits.  Falls back to that complex eigensolve
    when sigma is not positive definite, so diagnostic calls on unphysical
    matrices still return a spectrum.
    """
    n = sigma.shape[0] // 2
    omega = symplectic_form(n)
    scale = max(float(np.max(np.abs(sigma))), 1e-300)
    moduli = None
    if float(np.max(np.abs(sigma - sigma.T))) <= 1e-8 * scale:
        try:
            chol = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            moduli = None  # not positive definite; diagnose via the eig path
        else:
            moduli = np.linalg.svd(chol.T @ omega @ chol, compute_uv=False)
    if moduli is None:
        moduli = np.abs(np.linalg.eigvals(omega @ sigma))
    return _pair_moduli(moduli, scale)


def symplectic_eigenvalues(cov: CovarianceMatrix) -> SymplecticSpectrum:
    """Symplectic spectrum {nu_j} of a covariance matrix.

    Raises PairingFailure when the 2M moduli do not collapse into M pairs
    within tolerance, which signals a corrupted input.
    """
    return SymplecticSpectrum(values=_spectrum_of(cov.data))


def entropy_function(nu: float) -> float:
    """Bosonic entropy of one symplectic eigenvalue, in nats.

    h(nu) = (nu + 1/2) ln(nu + 1/2) - (nu - 1/2) ln(nu - 1/2), with h(1/2)=0.
    Values in [1/2 - NU_TOL, 1/2] are clamped to exactly 1/2 so that
    eigensolver noise on pure states cannot produce NaN.
    """
    nu = float(nu)
    if nu < 0.5 - NU_TOL:
        raise DomainError(f"symplectic eigenvalue {nu} below 1/2 - {NU_TOL}")
    if nu <= 0.5:
        return 0.0
    a = nu + 0.5
    b = nu - 0.5
    return a * np.log(a) - b * np.log(b)


def _entropy_of_values(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    if np.any(values < 0.5 - NU_TOL):
        worst = float(values.min())
        raise DomainError(f"symplectic eigenvalue {worst} below 1/2 - {NU_TOL}")
    a = values + 0.5
    b = np.clip(values - 0.5, 0.0, None)
    terms = a * np.log(a) - np.where(b > 0.0, b * np.log(np.where(b > 0.0, b, 1.0)), 0.0)
    return float(np.sum(terms))


def von_neumann_entropy(cov: CovarianceMatrix) -> float:
    """Total von Neumann entropy H = sum_j h(nu_j) in nats."""
    return _entropy_of_values(_spectrum_of(cov.data))


def partial_trace(cov: CovarianceMatrix, keep: ModeSubset) -> CovarianceMatrix:
    """Reduced state on the kept modes (principal submatrix, labels preserved)."""
    if len(keep) == 0:
        raise SubsetError("cannot keep an empty set of modes")
    if keep.indices[-1] >= cov.n_modes or keep.indices[0] < 0:
        raise IndexError(f"mode indices {keep.indices} out of range")
    rows = cov.rows_for(keep.indices)
    sub = cov.data[np.ix_(rows, rows)]
    labels = tuple(cov.labels[i] for i in keep.indices)
    return CovarianceMatrix(sub, labels)


def partial_transpose(cov: CovarianceMatrix, party_a: ModeSubset) -> CovarianceMatrix:
    """Momentum-sign flip P.sigma.P on the modes of ``party_a`` (involutive)."""
    if len(party_a) == 0 or len(party_a) >= cov.n_modes:
        raise SubsetError("party_a must be a strict non-empty subset of the modes")
    if party_a.indices[-1] >= cov.n_modes or party_a.indices[0] < 0:
        raise IndexError(f"mode indices {party_a.indices} out of range")
    signs = np.ones(2 * cov.n_modes)
    for m in party_a.indices:
        signs[2 * m + 1] = -1.0
    flipped = cov.data * signs[:, None] * signs[None, :]
    return CovarianceMatrix(flipped, cov.labels)


def log_negativity(cov: CovarianceMatrix, party_a: ModeSubset) -> float:
    """Logarithmic negativity across the bipartition party_a | rest, in nats.

    max(0, -sum ln(2 nu~)) over partially transposed eigenvalues nu~ < 1/2.
    Eigenvalues inside the NU_TOL band below 1/2 are treated as 1/2, so
    separable product states return exactly 0.0.
    """
    tilde = _spectrum_of(partial_transpose(cov, party_a).data)
    negative = tilde[tilde < 0.5 - NU_TOL]
    if negative.size == 0:
        return 0.0
    return max(0.0, -float(np.sum(np.log(2.0 * negative))))


def mutual_information(cov: CovarianceMatrix, part_a: ModeSubset, part_b: ModeSubset) -> float:
    """Mutual information I(A, B) = H(A) + H(B) - H(A, B) in nats.

    Modes outside A u B are traced out first.  All three entropies are
    computed from (partial traces of) the same covariance matrix.
    """
    set_a, set_b = set(part_a.indices), set(part_b.indices)
    if set_a & set_b:
        raise OverlapError(f"subsets overlap on modes {sorted(set_a & set_b)}")
    if len(part_a) == 0 or len(part_b) == 0:
        raise SubsetError("both subsets must be non-empty")
    union = sorted(set_a | set_b)
    if len(union) < cov.n_modes:
        cov = partial_trace(cov, ModeSubset.of(union, cov.n_modes))
        pos = {m: i for i, m in enumerate(union)}
        part_a = ModeSubset.of([pos[m] for m in part_a.indices], len(union))
        part_b = ModeSubset.of([pos[m] for m in part_b.indices], len(union))
    h_a = von_neumann_entropy(partial_trace(cov, part_a))
    h_b = von_neumann_entropy(partial_trace(cov, part_b))
    h_ab = von_neumann_entropy(cov)
    return h_a + h_b - h_ab


def validate_state(cov: CovarianceMatrix) -> ValidityReport:
    """Report minimum symplectic eigenvalue and symmetry defect (never raises)."""
    defect = float(np.max(np.abs(cov.data - cov.data.T)))
    try:
        min_nu = float(_spectrum_of(cov.data)[0])
    except PairingFailure:
        min_nu = float("nan")
    passed = (min_nu >= 0.5 - NU_TOL) and (defect <= NU_TOL)
    return ValidityReport(
        n_modes=cov.n_modes,
        min_symplectic=min_nu,
        symmetry_defect=defect,
        passed=bool(passed),
    )

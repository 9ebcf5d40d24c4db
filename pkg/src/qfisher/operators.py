"""Dense complex matrix kernel: Hermitian eigendecomposition with gauge control,
unitary exponentials of Hermitian generators, and Pauli algebra helpers.

All operators are plain complex numpy arrays; the functions here validate the
structural invariants (finite entries, Hermiticity, unitarity) instead of
wrapping arrays in dedicated classes. Units follow hbar = 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidMatrix

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

HERMITICITY_RTOL = 1e-12
UNITARITY_TOL = 1e-9

# Phase of the anchor component under the deterministic reporting gauge.
_GAUGE_PHASE_TOL = 1e-10


class GaugePolicy(Enum):
    """Phase convention applied to eigenvector columns."""

    LARGEST_COMPONENT_REAL_POSITIVE = "largest_component_real_positive"
    PARALLEL_TRANSPORT = "parallel_transport"


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues (ascending) and orthonormal eigenvector columns of a
    Hermitian operator, with the gauge policy that fixed the column phases."""

    values: np.ndarray
    vectors: np.ndarray
    gauge_policy: GaugePolicy

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def frobenius(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def hermitize(a: np.ndarray) -> np.ndarray:
    """Hermitian part (A + A^dagger)/2."""
    return 0.5 * (a + a.conj().T)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def hermiticity_defect(a: np.ndarray) -> float:
    """||A - A^dagger||_F relative to max(1, ||A||_F)."""
    return frobenius(a - a.conj().T) / max(1.0, frobenius(a))


def require_hermitian(a: np.ndarray, rtol: float = HERMITICITY_RTOL) -> np.ndarray:
    """Validate a square, finite, Hermitian matrix and return it as complex."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise InvalidMatrix("matrix has non-finite entries")
    if hermiticity_defect(a) > rtol:
        raise InvalidMatrix(
            f"matrix is not Hermitian (relative defect {hermiticity_defect(a):.3e})"
        )
    return a


def unitarity_defect(u: np.ndarray) -> float:
    return frobenius(u.conj().T @ u - np.eye(u.shape[0]))


def require_unitary(u: np.ndarray, tol: float = UNITARITY_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if unitarity_defect(u) > tol:
        raise InvalidMatrix(
            f"matrix is not unitary (defect {unitarity_defect(u):.3e})"
        )
    return u


def _fix_gauge_largest_component(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    out = vectors.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        anchor = col[int(np.argmax(np.abs(col)))]
        phase = anchor / abs(anchor)
        out[:, k] = col * phase.conjugate()
    return out


def _align_to_reference(
    values: np.ndarray, vectors: np.ndarray, reference: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Reorder branches by maximal overlap with reference columns and rotate
    each phase so <ref_k|v_k> is real positive (discrete parallel transport)."""
    overlaps = reference.conj().T @ vectors
    order = np.full(vectors.shape[1], -1, dtype=int)
    taken: set[int] = set()
    # Greedy assignment, largest overlaps first; exact ties cannot occur for
    # the nondegenerate spectra this is used on.
    flat = np.argsort(-np.abs(overlaps), axis=None)
    for idx in flat:
        k, j = divmod(int(idx), vectors.shape[1])
        if order[k] == -1 and j not in taken:
            order[k] = j
            taken.add(j)
    new_vectors = vectors[:, order]
    new_values = values[order]
    for k in range(new_vectors.shape[1]):
        ov = np.vdot(reference[:, k], new_vectors[:, k])
        if abs(ov) > 0:
            new_vectors[:, k] *= (ov / abs(ov)).conjugate()
    return new_values, new_vectors


def _eig2_closed_form(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form ascending eigensystem of a 2x2 Hermitian matrix."""
    p = a[0, 0].real
    q = a[1, 1].real
    b = a[0, 1]
    mean = 0.5 * (p + q)
    half_diff = 0.5 * (p - q)
    radius = float(np.hypot(half_diff, abs(b)))
    values = np.array([mean - radius, mean + radius])
    if radius == 0.0 or abs(b) == 0.0:
        # Diagonal matrix: coordinate eigenvectors ordered by value.
        if p <= q:
            vectors = np.eye(2, dtype=complex)
        else:
            vectors = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        return values, vectors
    vectors = np.empty((2, 2), dtype=complex)
    for col, lam in enumerate(values):
        # Two algebraically equivalent null vectors of (A - lam); pick the
        # better-conditioned one.
        cand1 = np.array([b, lam - p], dtype=complex)
        cand2 = np.array([lam - q, b.conjugate()], dtype=complex)
        v = cand1 if np.linalg.norm(cand1) >= np.linalg.norm(cand2) else cand2
        vectors[:, col] = v / np.linalg.norm(v)
    return values, vectors


def eig_hermitian(
    a: np.ndarray,
    policy: GaugePolicy = GaugePolicy.LARGEST_COMPONENT_REAL_POSITIVE,
    reference: np.ndarray | None = None,
) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix with a deterministic gauge.

    With the default policy each eigenvector's largest-magnitude component is
    made real positive. Under ``PARALLEL_TRANSPORT`` a ``reference`` column set
    from the previous point of a path is required: branches are matched to the
    reference by maximal overlap and phases chosen so overlaps are real
    positive.
    """
    a = require_hermitian(a)
    if a.shape[0] == 2:
        values, vectors = _eig2_closed_form(a)
    else:
        values, vectors = np.linalg.eigh(a)
        values = values.real
    if policy is GaugePolicy.LARGEST_COMPONENT_REAL_POSITIVE:
        vectors = _fix_gauge_largest_component(vectors)
    elif policy is GaugePolicy.PARALLEL_TRANSPORT:
        if reference is None:
            raise ValueError("parallel-transport gauge requires reference vectors")
        values, vectors = _align_to_reference(values, vectors, reference)
    return EigenSystem(values=values, vectors=vectors, gauge_policy=policy)


def pauli_components(a: np.ndarray) -> tuple[float, float, float, float]:
    """Real coefficients (c_I, c_x, c_y, c_z) of a 2x2 Hermitian matrix in the
    basis {I, sigma_x, sigma_y, sigma_z}."""
    a = np.asarray(a, dtype=complex)
    c_i = 0.5 * (a[0, 0] + a[1, 1]).real
    c_z = 0.5 * (a[0, 0] - a[1, 1]).real
    c_x = a[0, 1].real
    c_y = -a[0, 1].imag
    return c_i, c_x, c_y, c_z


def exp_skew(a: np.ndarray, s: float) -> np.ndarray:
    """Unitary exp(-i*s*A) for Hermitian A.

    Spectral form, exact for Hermitian generators; s = 0 returns the identity
    exactly. 2x2 matrices use the closed SU(2) form
    exp(-i*theta*(n.sigma)) = cos(theta) I - i sin(theta) (n.sigma).
    """
    a = require_hermitian(a)
    n = a.shape[0]
    if s == 0.0:
        return np.eye(n, dtype=complex)
    if n == 2:
        c0, cx, cy, cz = pauli_components(a)
        r = float(np.sqrt(cx * cx + cy * cy + cz * cz))
        phase = np.exp(-1j * s * c0)
        if r == 0.0:
            return phase * np.eye(2, dtype=complex)
        axis = (cx * SIGMA_X + cy * SIGMA_Y + cz * SIGMA_Z) / r
        return phase * (
            np.cos(s * r) * IDENTITY_2 - 1j * np.sin(s * r) * axis
        )
    values, vectors = np.linalg.eigh(a)
    return (vectors * np.exp(-1j * s * values)) @ vectors.conj().T


def exp_skew_batch(mats: np.ndarray, s: float) -> np.ndarray:
    """exp(-i*s*A_k) for a stack of Hermitian matrices, shape (n, d, d).

    The 2x2 case is fully vectorized; other dimensions fall back to per-matrix
    spectral exponentials.
    """
    mats = np.asarray(mats, dtype=complex)
    n, d, _ = mats.shape
    if s == 0.0:
        return np.broadcast_to(np.eye(d, dtype=complex), mats.shape).copy()
    if d == 2:
        c0 = 0.5 * (mats[:, 0, 0] + mats[:, 1, 1]).real
        cz = 0.5 * (mats[:, 0, 0] - mats[:, 1, 1]).real
        cx = mats[:, 0, 1].real
        cy = -mats[:, 0, 1].imag
        r = np.sqrt(cx * cx + cy * cy + cz * cz)
        cos = np.cos(s * r)
        # sin(s*r)/r with the r -> 0 limit handled explicitly.
        safe_r = np.where(r > 0.0, r, 1.0)
        sinc = np.where(r > 0.0, np.sin(s * r) / safe_r, s)
        phase = np.exp(-1j * s * c0)
        out = np.zeros_like(mats)
        out[:, 0, 0] = cos - 1j * sinc * cz
        out[:, 1, 1] = cos + 1j * sinc * cz
        out[:, 0, 1] = -1j * sinc * (cx - 1j * cy)
        out[:, 1, 0] = -1j * sinc * (cx + 1j * cy)
        return phase[:, None, None] * out
    out = np.empty_like(mats)
    for k in range(n):
        values, vectors = np.linalg.eigh(mats[k])
        out[k] = (vectors * np.exp(-1j * s * values)) @ vectors.conj().T
    return out


def conjugate_pauli(i: str, j: str, alpha: float) -> np.ndarray:
    """exp(i*alpha*sigma_i) sigma_j exp(-i*alpha*sigma_i).

    Closed form: sigma_i for i = j, else
    cos(2*alpha)*sigma_j + (i/2)*sin(2*alpha)*[sigma_i, sigma_j].
    """
    if i not in PAULI or j not in PAULI:
        raise ValueError(f"Pauli indices must be in {{x, y, z}}, got ({i!r}, {j!r})")
    if i == j:
        return PAULI[i].copy()
    return np.cos(2.0 * alpha) * PAULI[j] + 0.5j * np.sin(2.0 * alpha) * commutator(
        PAULI[i], PAULI[j]
    )

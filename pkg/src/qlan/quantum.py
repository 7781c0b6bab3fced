"""Dense linear algebra and entanglement metrics for one- and two-qubit states.

Basis ordering is fixed globally: two-qubit matrices are indexed (HH, HV, VH, VV),
single-qubit matrices (H, V). The first tensor slot belongs to the first node of a
link name (A-B puts Alice first).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonHermitianInput

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_TOL = 1e-10

# Single-qubit basis states, (H, V) ordering.
KET_H = np.array([1.0, 0.0], dtype=complex)
KET_V = np.array([0.0, 1.0], dtype=complex)
KET_D = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
KET_A = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)
KET_R = np.array([1.0, 1.0j], dtype=complex) / np.sqrt(2.0)
KET_L = np.array([1.0, -1.0j], dtype=complex) / np.sqrt(2.0)

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def kron(a, b):
    """Kronecker product with row-major block convention."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def ket_psi_plus(phase_rad=0.0):
    """(|HV> + e^{i phase}|VH>)/sqrt(2) in the fixed (HH, HV, VH, VV) ordering."""
    ket = np.zeros(4, dtype=complex)
    ket[1] = 1.0
    ket[2] = np.exp(1j * phase_rad)
    return ket / np.sqrt(2.0)


def ket_psi_minus():
    return ket_psi_plus(np.pi)


def ket_phi_plus(phase_rad=0.0):
    ket = np.zeros(4, dtype=complex)
    ket[0] = 1.0
    ket[3] = np.exp(1j * phase_rad)
    return ket / np.sqrt(2.0)


def ket_phi_minus():
    return ket_phi_plus(np.pi)


def pure_state_density(ket):
    """|psi><psi| for a normalized state vector."""
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def werner_state(p, phase_rad=0.0):
    """p * |Psi(phase)><Psi(phase)| + (1 - p) * I/4."""
    dim = 4
    return p * pure_state_density(ket_psi_plus(phase_rad)) + (1.0 - p) * np.eye(dim) / dim


def is_density_matrix(rho, hermiticity_tol=HERMITICITY_TOL, trace_tol=TRACE_TOL,
                      eigenvalue_tol=EIGENVALUE_TOL):
    """Check the three density-matrix invariants (Hermitian, unit trace, PSD)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if np.max(np.abs(rho - rho.conj().T)) > hermiticity_tol:
        return False
    if abs(np.trace(rho) - 1.0) > trace_tol:
        return False
    eigs = hermitian_eigenvalues(rho)
    return eigs.min() >= -eigenvalue_tol


def validate_density_matrix(rho, name="rho"):
    if not is_density_matrix(rho):
        raise ValueError(f"{name} violates density-matrix invariants")
    return np.asarray(rho, dtype=complex)


def hermitian_eigh(matrix, off_diag_tol=1e-14, max_sweeps=100):
    """Eigendecomposition of a Hermitian matrix via cyclic Jacobi rotations.

    Self-contained on purpose: the entanglement metrics below must not share a
    code path with the eigendecomposition oracles used to test them. Converges
    when every off-diagonal magnitude drops below ``off_diag_tol``. Returns
    (eigenvalues ascending, eigenvector columns).
    """
    a = np.array(matrix, dtype=complex)
    n = a.shape[0]
    vectors = np.eye(n, dtype=complex)
    if n == 1:
        return np.array([a[0, 0].real]), vectors
    upper = ~np.tri(n, dtype=bool)
    for _ in range(max_sweeps):
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= off_diag_tol:
                    continue
                # Unitary 2x2 rotation zeroing a[p, q]: phase removes the
                # complex argument, then a real Jacobi rotation.
                phase = apq / mag
                app = a[p, p].real
                aqq = a[q, q].real
                theta = 0.5 * np.arctan2(2.0 * mag, aqq - app)
                c = np.cos(theta)
                s = np.sin(theta)
                # Columns: [p, q] <- [p, q] @ [[c, s*phase], [-s*conj(phase), c]]
                col_p = c * a[:, p] - s * np.conj(phase) * a[:, q]
                col_q = s * phase * a[:, p] + c * a[:, q]
                a[:, p] = col_p
                a[:, q] = col_q
                row_p = c * a[p, :] - s * phase * a[q, :]
                row_q = s * np.conj(phase) * a[p, :] + c * a[q, :]
                a[p, :] = row_p
                a[q, :] = row_q
                vcol_p = c * vectors[:, p] - s * np.conj(phase) * vectors[:, q]
                vcol_q = s * phase * vectors[:, p] + c * vectors[:, q]
                vectors[:, p] = vcol_p
                vectors[:, q] = vcol_q
        if np.max(np.abs(a[upper])) <= off_diag_tol:
            break
    order = np.argsort(np.diag(a).real)
    return np.diag(a).real[order], vectors[:, order]


def hermitian_eigenvalues(matrix, off_diag_tol=1e-14, max_sweeps=100):
    """Eigenvalues (ascending) of a Hermitian matrix; see hermitian_eigh."""
    return hermitian_eigh(matrix, off_diag_tol, max_sweeps)[0]


def partial_transpose(rho, subsystem=1):
    """Transpose one qubit of a two-qubit operator.

    Default acts on the second subsystem; log-negativity is invariant under the
    choice. Output stays Hermitian with unit trace but may have negative
    eigenvalues.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise DimensionMismatch(f"expected 4x4 matrix, got {rho.shape}")
    blocks = rho.reshape(2, 2, 2, 2)
    if subsystem == 1:
        transposed = blocks.transpose(0, 3, 2, 1)
    elif subsystem == 0:
        transposed = blocks.transpose(2, 1, 0, 3)
    else:
        raise ValueError("subsystem must be 0 or 1")
    return transposed.reshape(4, 4)


def trace_norm(matrix, asymmetry_tol=1e-10):
    """Sum of absolute eigenvalues of a Hermitian matrix.

    Inputs with asymmetry below ``asymmetry_tol`` are symmetrized; anything
    worse raises NonHermitianInput.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected square matrix, got {m.shape}")
    asym = np.max(np.abs(m - m.conj().T))
    if asym > asymmetry_tol:
        raise NonHermitianInput(f"asymmetry {asym:.3e} exceeds {asymmetry_tol:.1e}")
    sym = 0.5 * (m + m.conj().T)
    return float(np.sum(np.abs(hermitian_eigenvalues(sym))))


def log_negativity(rho):
    """log2 of the trace norm of the partial transpose, clamped to >= 0."""
    tn = trace_norm(partial_transpose(rho))
    if tn <= 1.0:
        return 0.0
    return float(np.log2(tn))


def fidelity_with_pure(rho, target):
    """<target| rho |target>, real in [0, 1]."""
    rho = np.asarray(rho, dtype=complex)
    target = np.asarray(target, dtype=complex).ravel()
    if rho.shape != (target.size, target.size):
        raise DimensionMismatch(
            f"state is {rho.shape}, target has dimension {target.size}")
    value = target.conj() @ rho @ target
    return float(value.real)


def partial_trace(rho, keep):
    """Reduced single-qubit state of a two-qubit density matrix.

    ``keep`` selects the surviving subsystem: 0 for the first tensor slot,
    1 for the second.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise DimensionMismatch(f"expected 4x4 matrix, got {rho.shape}")
    blocks = rho.reshape(2, 2, 2, 2)
    if keep == 0:
        return np.einsum("ikjk->ij", blocks)
    if keep == 1:
        return np.einsum("kikj->ij", blocks)
    raise ValueError("keep must be 0 or 1")


def ebit_rate(log_neg, coincidence_rate):
    """Entangled bits per second: log-negativity times coincidence rate."""
    if log_neg < 0 or coincidence_rate < 0:
        raise ValueError("log-negativity and rate must be non-negative")
    return log_neg * coincidence_rate


def mixed_state_fidelity(rho, sigma):
    """Uhlmann fidelity between two qubit density matrices.

    Uses the closed form F = tr(rho sigma) + 2 sqrt(det rho det sigma), valid
    for 2x2 states.
    """
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != (2, 2) or sigma.shape != (2, 2):
        raise DimensionMismatch("closed-form fidelity is for 2x2 states")
    overlap = np.trace(rho @ sigma).real
    dets = np.linalg.det(rho).real * np.linalg.det(sigma).real
    return float(overlap + 2.0 * np.sqrt(max(dets, 0.0)))


def bloch_vector(rho):
    """(S1, S2, S3) Stokes/Bloch components of a qubit state."""
    rho = np.asarray(rho, dtype=complex)
    return np.array([
        np.trace(rho @ PAULI_X).real,
        np.trace(rho @ PAULI_Y).real,
        np.trace(rho @ PAULI_Z).real,
    ])


@dataclass(frozen=True)
class EntanglementSummary:
    """Link throughput metrics: log-negativity, pairs/s, ebits/s, fidelity."""

    log_negativity: float
    coincidence_rate: float
    ebit_rate: float
    fidelity: float

    def __post_init__(self):
        if not 0.0 <= self.log_negativity <= 1.0 + 1e-12:
            raise ValueError("two-qubit log-negativity must lie in [0, 1]")
        if not 0.0 <= self.fidelity <= 1.0 + 1e-12:
            raise ValueError("fidelity must lie in [0, 1]")
        expected = self.log_negativity * self.coincidence_rate
        if self.ebit_rate != expected:
            raise ValueError("ebit_rate must equal log_negativity * coincidence_rate")

    @classmethod
    def from_state(cls, rho, coincidence_rate, target=None):
        target = ket_psi_plus() if target is None else target
        en = log_negativity(rho)
        return cls(
            log_negativity=en,
            coincidence_rate=coincidence_rate,
            ebit_rate=en * coincidence_rate,
            fidelity=fidelity_with_pure(rho, target),
        )

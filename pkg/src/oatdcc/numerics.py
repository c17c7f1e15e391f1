"""Small shared numerical helpers."""

import numpy as np


def regularized_inverse(mat, eps=1e-8, hermitian=False):
    """Inverse with eigenvalues sigma replaced by sigma + eps * exp(-sigma / eps).

    The standard cure for (near-)singular reduced density matrices: exact
    inverse for eigenvalues much larger than eps, smooth cutoff below.  Works
    for the non-Hermitian matrices of the biorthogonal theory as well.
    """
    mat = np.asarray(mat, dtype=complex)
    if mat.shape[0] == 0:
        return mat.copy()
    if hermitian:
        vals, vecs = np.linalg.eigh(mat)
        reg = vals + eps * np.exp(-np.abs(vals) / eps)
        return (vecs * (1.0 / reg)) @ vecs.conj().T
    # |sigma| in the exponent keeps the damping well-defined off the real axis
    vals, vecs = np.linalg.eig(mat)
    reg = vals + eps * np.exp(-np.abs(vals) / eps)
    return vecs @ np.diag(1.0 / reg) @ np.linalg.inv(vecs)

"""Dense complex-matrix kernels: Hermitian eigensolvers and positive-matrix helpers.

Everything downstream (norms, positivity tests, square roots, Wedderburn
standardization, quotient constructions) funnels through
`hermitian_eigendecomposition`, so its contract is the load-bearing one:
ascending eigenvalues, deterministic eigenvector phases, and a verified
reconstruction residual.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError, PreconditionError

DEFAULT_TOL = 1e-10

# Convergence target for the Jacobi sweep loop: off-diagonal Frobenius mass
# relative to the input's Frobenius norm.
JACOBI_OFFDIAG_TARGET = 1e-13
JACOBI_MAX_SWEEPS = 100


def as_complex_matrix(data) -> np.ndarray:
    """Coerce to a finite 2-d complex128 array."""
    m = np.asarray(data, dtype=np.complex128)
    if m.ndim != 2:
        raise PreconditionError(f"expected a matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise PreconditionError("matrix contains NaN or Inf entries")
    return m


def frobenius(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def hermitian_defect(m: np.ndarray) -> float:
    """Frobenius distance to the Hermitian part."""
    return frobenius(m - m.conj().T) / 2.0


def require_hermitian(m: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    m = as_complex_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise PreconditionError(f"matrix is {m.shape}, not square")
    scale = max(frobenius(m), 1.0)
    defect = hermitian_defect(m)
    if defect > rel_tol * scale:
        raise PreconditionError(
            f"matrix is not Hermitian: defect {defect:.3e} > {rel_tol:.1e}*{scale:.3e}"
        )
    return (m + m.conj().T) / 2.0


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its first significant entry is positive real.

    Makes eigenbases reproducible across runs and BLAS builds; the pivot is
    the first entry within 1e-8 of the column's max modulus.
    """
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        mags = np.abs(col)
        top = mags.max()
        if top == 0.0:
            continue
        pivot = int(np.argmax(mags > (1.0 - 1e-8) * top))
        phase = col[pivot] / abs(col[pivot])
        out[:, j] = col * np.conj(phase)
    return out


def _jacobi_rotate(h: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """One complex Jacobi rotation zeroing h[p, q], accumulated into v."""
    apq = h[p, q]
    mod = abs(apq)
    if mod == 0.0:
        return
    phi = apq / mod
    tau = (h[q, q].real - h[p, p].real) / (2.0 * mod)
    if tau >= 0.0:
        t = -1.0 / (tau + np.sqrt(1.0 + tau * tau))
    else:
        t = 1.0 / (-tau + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c

    # Unitary J = I except J[[p,q],[p,q]] = [[c, -s*phi], [s*conj(phi), c]].
    col_p = h[:, p].copy()
    col_q = h[:, q].copy()
    h[:, p] = c * col_p + s * np.conj(phi) * col_q
    h[:, q] = -s * phi * col_p + c * col_q
    row_p = h[p, :].copy()
    row_q = h[q, :].copy()
    h[p, :] = c * row_p + s * phi * row_q
    h[q, :] = -s * np.conj(phi) * row_p + c * row_q
    h[p, q] = 0.0
    h[q, p] = 0.0
    h[p, p] = h[p, p].real
    h[q, q] = h[q, q].real

    vol_p = v[:, p].copy()
    vol_q = v[:, q].copy()
    v[:, p] = c * vol_p + s * np.conj(phi) * vol_q
    v[:, q] = -s * phi * vol_p + c * vol_q


def _offdiag_frobenius(h: np.ndarray) -> float:
    return frobenius(h - np.diag(np.diag(h)))


def jacobi_eigh(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi diagonalization of a Hermitian matrix.

    Sweeps all (p, q) pivots, skipping entries already below the per-sweep
    threshold; converged when the off-diagonal Frobenius mass drops below
    1e-13 times the input Frobenius norm. Raises NumericalError after 100
    sweeps without convergence.
    """
    h = require_hermitian(h)
    n = h.shape[0]
    scale = max(frobenius(h), 1.0)
    work = h.copy()
    v = np.eye(n, dtype=np.complex128)
    if n == 1:
        return work.real.reshape(1), v
    target = JACOBI_OFFDIAG_TARGET * scale
    for sweep in range(JACOBI_MAX_SWEEPS):
        off = _offdiag_frobenius(work)
        if off <= target:
            break
        # Rotating pivots already far below the remaining mass is wasted work.
        threshold = min(off / n, off)
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(work[p, q]) > threshold * 1e-3:
                    _jacobi_rotate(work, v, p, q)
    else:
        raise NumericalError(
            "Jacobi sweep limit reached without convergence",
            offdiag=_offdiag_frobenius(work),
            target=target,
            sweeps=JACOBI_MAX_SWEEPS,
        )
    vals = np.diag(work).real
    order = np.argsort(vals, kind="stable")
    return vals[order], _fix_phases(v[:, order])


def hermitian_eigendecomposition(
    h, *, engine: str = "lapack", check_rel_tol: float = 1e-10
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecompose a Hermitian matrix; returns (ascending values, unitary columns).

    Verifies the reconstruction residual ||U diag(w) U* - h||_F <= 1e-10*||h||_F
    and ||U*U - I||_F <= 1e-10 before returning.
    """
    h = require_hermitian(h)
    if engine == "jacobi":
        vals, vecs = jacobi_eigh(h)
    elif engine == "lapack":
        vals, vecs = np.linalg.eigh(h)
        order = np.argsort(vals, kind="stable")
        vals = vals[order]
        vecs = _fix_phases(vecs[:, order])
    else:
        raise PreconditionError(f"unknown eigensolver engine {engine!r}")

    scale = max(frobenius(h), 1.0)
    recon = frobenius((vecs * vals) @ vecs.conj().T - h)
    ortho = frobenius(vecs.conj().T @ vecs - np.eye(h.shape[0]))
    if recon > check_rel_tol * scale or ortho > check_rel_tol:
        raise NumericalError(
            "eigendecomposition failed its residual contract",
            reconstruction=recon,
            orthogonality=ortho,
            scale=scale,
        )
    return vals, vecs


def spectral_norm(m: np.ndarray) -> float:
    """Largest singular value, via the top eigenvalue of m*m."""
    m = as_complex_matrix(m)
    if m.size == 0:
        return 0.0
    gram = m.conj().T @ m
    vals, _ = hermitian_eigendecomposition((gram + gram.conj().T) / 2.0)
    return float(np.sqrt(max(vals[-1], 0.0)))


def min_eigenvalue(h) -> float:
    vals, _ = hermitian_eigendecomposition(h)
    return float(vals[0])


def psd_function(h, fn, *, floor: float = 0.0) -> np.ndarray:
    """Apply a scalar function to the spectrum of a (near-)PSD Hermitian matrix.

    Eigenvalues below `floor` are clamped to zero before `fn` is applied.
    """
    vals, vecs = hermitian_eigendecomposition(h)
    clipped = np.where(vals > floor, vals, 0.0)
    return (vecs * fn(clipped)) @ vecs.conj().T


def psd_sqrt_matrix(h, *, floor: float = 0.0) -> np.ndarray:
    return psd_function(h, np.sqrt, floor=floor)


def support_projection(h, *, rel_threshold: float = 1e-12) -> tuple[np.ndarray, int]:
    """Orthogonal projection onto the significant eigenspace of a PSD matrix.

    Returns (projection, rank); eigenvalues <= rel_threshold * max eigenvalue
    (with an absolute floor of 1e-14) count as zero.
    """
    vals, vecs = hermitian_eigendecomposition(h)
    top = max(float(vals[-1]), 0.0) if vals.size else 0.0
    cut = max(rel_threshold * top, 1e-14)
    keep = vals > cut
    rank = int(np.count_nonzero(keep))
    basis = vecs[:, keep]
    return basis @ basis.conj().T, rank


def matrix_rank(m, *, rel_threshold: float = 1e-9) -> int:
    """Rank by singular values relative to the largest one."""
    m = as_complex_matrix(m)
    if m.size == 0:
        return 0
    svals = np.linalg.svd(m, compute_uv=False)
    top = float(svals[0]) if svals.size else 0.0
    if top == 0.0:
        return 0
    return int(np.count_nonzero(svals > rel_threshold * top))


def block_diag(blocks: list[np.ndarray]) -> np.ndarray:
    """Dense block-diagonal assembly."""
    sizes_r = [b.shape[0] for b in blocks]
    sizes_c = [b.shape[1] for b in blocks]
    out = np.zeros((sum(sizes_r), sum(sizes_c)), dtype=np.complex128)
    r = c = 0
    for b in blocks:
        out[r : r + b.shape[0], c : c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def random_complex(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    m = random_complex(rng, n, n)
    return (m + m.conj().T) / 2.0

"""Compiled inner loops for the master-equation propagator.

The Liouvillian is applied to a dense (Hermitian) matrix in one fused pass:
``out = s * L(rho) + t * rho + prev`` with

    L(rho) = -i (Heff rho - rho Heff^dagger) + sum_m 2 r_m A_m rho A_m^dagger,
    Heff   = H - i sum_m r_m A_m^dagger A_m.

Pairs (i, j) whose sector labels differ are skipped and written as zero;
callers only pass non-trivial sectors when the dynamics provably keeps those
coherences at zero. ``R`` and ``prev`` must be Hermitian and ``s``, ``t`` real,
so that ``out`` is Hermitian too; only its upper triangle is computed.
``out`` may alias ``prev``.
"""

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None


def _fused_python(hp, hi, hd, jp, ji, jd, jop, rates, sector, R, s, t, prev, out):
    # Reference implementation with the same contract, used when numba is absent.
    import scipy.sparse as sp

    d = R.shape[0]
    Heff = sp.csr_matrix((hd, hi, hp), shape=(d, d))
    X = -1j * (Heff @ R)
    L = X + (-1j * (Heff @ R.conj().T)).conj().T
    for m in range(rates.size):
        ptr = jp[jop[m] : jop[m] + d + 1]
        lo, hi = ptr[0], ptr[-1]
        A = sp.csr_matrix((jd[lo:hi], ji[lo:hi], ptr - lo), shape=(d, d))
        L = L + 2.0 * rates[m] * (A @ (A @ R.conj().T).conj().T)
    mask = sector[:, None] == sector[None, :]
    out[...] = np.where(mask, s * L + t * R + prev, 0)


if numba is not None:

    @numba.njit(cache=True, fastmath=True)
    def _fused_numba(hp, hi, hd, jp, ji, jd, jop, rates, sector, R, s, t, prev, out):
        # upper triangle only, mirrored: valid because R and prev are Hermitian and s, t real
        d = R.shape[0]
        hc = np.conj(hd)
        jc = np.conj(jd)
        for i in range(d):
            si = sector[i]
            for j in range(i, d):
                if sector[j] != si:
                    out[i, j] = 0
                    out[j, i] = 0
                    continue
                left = 0j
                for p in range(hp[i], hp[i + 1]):
                    left += hd[p] * R[hi[p], j]
                right = 0j
                for q in range(hp[j], hp[j + 1]):
                    right += R[i, hi[q]] * hc[q]
                tot = -1j * (left - right)
                for m in range(rates.size):
                    off = jop[m]
                    acc = 0j
                    for p in range(jp[off + i], jp[off + i + 1]):
                        for q in range(jp[off + j], jp[off + j + 1]):
                            acc += jd[p] * jc[q] * R[ji[p], ji[q]]
                    tot += 2.0 * rates[m] * acc
                v = s * tot + t * R[i, j] + prev[i, j]
                if i == j:
                    out[i, i] = v.real
                else:
                    out[i, j] = v
                    out[j, i] = np.conj(v)

    fused_liouvillian = _fused_numba
else:
    fused_liouvillian = _fused_python

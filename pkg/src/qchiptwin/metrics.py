"""Two-qubit state diagnostics: purity, Schmidt number, CHSH value and z-optimized fidelity."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

__all__ = [
    "validate_density",
    "purity",
    "partial_trace",
    "schmidt_number",
    "correlation_matrix",
    "chsh_horodecki",
    "chsh_value",
    "chsh_optimize",
    "fidelity",
    "fidelity_local_z",
    "MetricValue",
    "MetricsReport",
]

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]])
_SZ = np.diag([1.0, -1.0]).astype(complex)
_SIGMA = (_SX, _SY, _SZ)
_SS = np.array([[np.kron(a, b) for b in _SIGMA] for a in _SIGMA])


def validate_density(rho: np.ndarray, clip: float = 1e-9) -> np.ndarray:
    """Return a clean copy of ``rho``: Hermitian, unit trace, small negative eigenvalues clipped.

    Eigenvalues below ``-clip`` raise ``ValueError``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 density matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1) > 1e-10:
        raise ValueError("density matrix trace is not 1")
    rho = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(rho)
    if w.min() < -clip:
        raise ValueError(f"density matrix has eigenvalue {w.min():.3g} < -{clip}")
    if w.min() < 0:
        w = np.clip(w, 0, None)
        w /= w.sum()
        rho = (v * w) @ v.conj().T
    return rho


def purity(rho: np.ndarray) -> float:
    """Tr(rho^2)."""
    p = np.trace(rho @ rho)
    assert abs(p.imag) < 1e-12
    return float(p.real)


def partial_trace(rho: np.ndarray, keep: str = "T") -> np.ndarray:
    """Reduced 2x2 state of qubit ``keep`` (T is the first tensor factor)."""
    r = np.asarray(rho).reshape(2, 2, 2, 2)
    if keep.upper() == "T":
        return np.einsum("ijkj->ik", r)
    if keep.upper() == "B":
        return np.einsum("jijk->ik", r)
    raise ValueError("keep must be 'T' or 'B'")


def schmidt_number(rho: np.ndarray) -> float:
    """1 / Tr(rho_T^2): the inverse participation ratio of the Schmidt weights for pure states.

    For mixed states this is the reduced-purity extension, which mixes
    classical and quantum uncertainty (a maximally mixed state also gives 2).
    """
    rt = partial_trace(rho, "T")
    return float(1.0 / np.trace(rt @ rt).real)


def correlation_matrix(rho: np.ndarray) -> np.ndarray:
    """T[i, j] = Tr(rho sigma_i x sigma_j), i, j over x, y, z."""
    return np.einsum("ab,ijba->ij", rho, _SS).real


def chsh_horodecki(rho: np.ndarray) -> float:
    """Maximal CHSH value 2 sqrt(t1 + t2) from the two largest eigenvalues of T^T T."""
    T = correlation_matrix(rho)
    ev = np.sort(np.linalg.eigvalsh(T.T @ T))[::-1]
    return float(2 * np.sqrt(max(ev[0] + ev[1], 0.0)))


def _unit(theta, phi):
    return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


def chsh_value(rho: np.ndarray, a, a2, b, b2) -> float:
    """|E(a,b) + E(a,b') + E(a',b) - E(a',b')| for Bloch directions."""
    T = correlation_matrix(rho)
    e = lambda x, y: np.asarray(x) @ T @ np.asarray(y)  # noqa: E731
    return float(abs(e(a, b) + e(a, b2) + e(a2, b) - e(a2, b2)))


def chsh_optimize(rho: np.ndarray, starts: int = 16, seed: int = 0) -> tuple[float, dict[str, np.ndarray]]:
    """Numerically chosen optimal CHSH measurement set.

    For fixed ``b, b'`` the best ``a, a'`` are the directions of
    ``T(b+b')`` and ``T(b-b')``; the remaining four spherical angles are
    optimized by multi-start BFGS.
    """
    T = correlation_matrix(rho)

    def s_of(p):
        b, b2 = _unit(p[0], p[1]), _unit(p[2], p[3])
        return np.linalg.norm(T @ (b + b2)) + np.linalg.norm(T @ (b - b2))

    rng = np.random.default_rng(seed)
    best_val, best_p = -1.0, None
    for _ in range(starts):
        p0 = np.array([np.arccos(rng.uniform(-1, 1)), rng.uniform(0, 2 * np.pi), np.arccos(rng.uniform(-1, 1)), rng.uniform(0, 2 * np.pi)])
        res = optimize.minimize(lambda p: -s_of(p), p0, method="BFGS", options={"gtol": 1e-12})
        if -res.fun > best_val:
            best_val, best_p = -res.fun, res.x
    b, b2 = _unit(best_p[0], best_p[1]), _unit(best_p[2], best_p[3])

    def direction(v):
        n = np.linalg.norm(v)
        return v / n if n > 1e-15 else np.array([0.0, 0.0, 1.0])

    a, a2 = direction(T @ (b + b2)), direction(T @ (b - b2))
    dirs = {"a": a, "a_prime": a2, "b": b, "b_prime": b2}
    return chsh_value(rho, a, a2, b, b2), dirs


def fidelity(rho: np.ndarray, psi: np.ndarray) -> float:
    """<psi| rho |psi>."""
    psi = np.asarray(psi, dtype=complex)
    return float(np.vdot(psi, rho @ psi).real)


def _local_z_fid(rho, psi, zt, zb):
    # (Rz(zt) x Rz(zb)) is diagonal with phases exp(i(+-zt +- zb)/2)
    st = np.array([-1, -1, 1, 1])
    sb = np.array([-1, 1, -1, 1])
    ph = np.exp(0.5j * (np.multiply.outer(zt, st) + np.multiply.outer(zb, sb)))
    # F = sum_ij conj(psi_i) d_i rho_ij conj(d_j) psi_j
    M = np.conj(psi)[:, None] * rho * psi[None, :]
    return np.einsum("...i,ij,...j->...", ph, M, np.conj(ph)).real


def fidelity_local_z(rho: np.ndarray, psi: np.ndarray, grid: int = 64) -> tuple[float, float, float]:
    """max over zeta_t, zeta_b of the fidelity of (Rz x Rz) rho (Rz x Rz)^dagger with psi.

    Coarse ``grid x grid`` scan followed by local refinement. Angles are
    returned in [0, 2 pi); optima are generally not unique.
    """
    psi = np.asarray(psi, dtype=complex)
    g = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    ZT, ZB = np.meshgrid(g, g, indexing="ij")
    F = _local_z_fid(rho, psi, ZT, ZB)
    i, j = np.unravel_index(np.argmax(F), F.shape)
    res = optimize.minimize(
        lambda z: -_local_z_fid(rho, psi, z[0], z[1]),
        np.array([g[i], g[j]]),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000},
    )
    zt, zb = np.mod(res.x, 2 * np.pi)
    f = float(_local_z_fid(rho, psi, zt, zb))
    f0 = float(F[i, j])
    if f0 > f:
        f, zt, zb = f0, g[i], g[j]
    return f, float(zt), float(zb)


@dataclass
class MetricValue:
    value: float
    std: float | None = None
    n_samples: int = 0


@dataclass
class MetricsReport:
    purity: MetricValue
    schmidt_number: MetricValue
    chsh: MetricValue
    fidelity: MetricValue

    def to_json(self, **extra) -> str:
        d = {k: asdict(v) for k, v in self.__dict__.items()}
        d.update(extra)
        return json.dumps(d, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        d = json.loads(text)
        return cls(**{k: MetricValue(**d[k]) for k in ("purity", "schmidt_number", "chsh", "fidelity")})

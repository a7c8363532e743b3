"""Sixteen-setting two-qubit tomography: count simulation, linear and ML reconstruction,
Monte-Carlo error bars."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .gate import single_qubit_unitary

__all__ = [
    "LABELS",
    "LABEL_ANGLES",
    "MeasurementSetting",
    "CountRecord",
    "ReconstructedState",
    "MonteCarloResult",
    "tomo_settings",
    "projector",
    "expected_rate",
    "simulate_counts",
    "linear_reconstruct",
    "ml_reconstruct",
    "log_likelihood",
    "log_likelihood_grad",
    "monte_carlo",
]

LABELS = ("Z0", "Z1", "X+", "Y+")
# (theta_z3, theta_y2) bringing each basis state onto rail0
LABEL_ANGLES = {
    "Z0": (0.0, 0.0),
    "Z1": (0.0, np.pi),
    "X+": (0.0, -np.pi / 2),
    "Y+": (np.pi / 2, np.pi / 2),
}

_PAULI = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]]),
    np.diag([1.0, -1.0]).astype(complex),
]
_PAULI2 = np.array([np.kron(a, b) for a in _PAULI for b in _PAULI])


@dataclass(frozen=True)
class MeasurementSetting:
    label_t: str
    label_b: str

    def angles(self) -> dict[str, float]:
        zt, yt = LABEL_ANGLES[self.label_t]
        zb, yb = LABEL_ANGLES[self.label_b]
        return {"theta_tz3": zt, "theta_ty2": yt, "theta_bz3": zb, "theta_by2": yb}


def _single_projector(label: str) -> np.ndarray:
    z, y = LABEL_ANGLES[label]
    u = single_qubit_unitary(z, y, 0.0)
    row = u[0, :]  # detection on rail0 after the rotation
    return np.outer(row.conj(), row)


def projector(s: MeasurementSetting) -> np.ndarray:
    return np.kron(_single_projector(s.label_t), _single_projector(s.label_b))


def tomo_settings() -> list[MeasurementSetting]:
    return [MeasurementSetting(a, b) for a, b in itertools.product(LABELS, LABELS)]


_SETTINGS = tomo_settings()
_PROJ = np.array([projector(s) for s in _SETTINGS])
# counts = N * B @ c, rho = sum_k c_k P_k / 4
_DESIGN = np.einsum("sij,kji->sk", _PROJ, _PAULI2).real / 4


def expected_rate(rho: np.ndarray, s: MeasurementSetting, flux: float, accidental_rate: float = 0.0) -> float:
    return flux * float(np.trace(rho @ projector(s)).real) + accidental_rate


@dataclass
class CountRecord:
    counts: np.ndarray
    integration_time: float
    accidental_rate: float = 0.0
    flux: float = float("nan")
    seed: int | None = None
    settings: list[MeasurementSetting] = field(default_factory=tomo_settings)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (len(self.settings),) or len(self.settings) != 16:
            raise ValueError("a count record holds exactly 16 settings")
        if len(set(self.settings)) != 16:
            raise ValueError("settings must be distinct")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")
        if self.integration_time <= 0:
            raise ValueError("integration_time must be positive")

    def ordered_counts(self) -> np.ndarray:
        """Counts in the canonical ``tomo_settings()`` order."""
        pos = {s: i for i, s in enumerate(self.settings)}
        return np.array([self.counts[pos[s]] for s in _SETTINGS])

    def subtracted(self) -> np.ndarray:
        """Accidental-subtracted counts, floored at zero (a small positive bias at low counts)."""
        n = self.ordered_counts() - self.accidental_rate * self.integration_time
        return np.clip(n, 0.0, None)

    def with_counts(self, counts: np.ndarray) -> "CountRecord":
        return CountRecord(np.asarray(counts), self.integration_time, self.accidental_rate, self.flux, self.seed, list(self.settings))

    def to_text(self) -> str:
        lines = [
            f"# integration_time = {self.integration_time!r}",
            f"# flux = {self.flux!r}",
            f"# accidental_rate = {self.accidental_rate!r}",
            f"# seed = {self.seed if self.seed is not None else 'none'}",
        ]
        lines += [f"{s.label_t} {s.label_b} {int(c)}" for s, c in zip(self.settings, self.counts)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CountRecord":
        header: dict[str, str] = {}
        settings, counts = [], []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, val = line[1:].partition("=")
                if sep:
                    header[key.strip()] = val.strip()
                continue
            parts = line.split()
            if len(parts) != 3 or parts[0] not in LABELS or parts[1] not in LABELS:
                raise ValueError(f"line {lineno}: expected 'label_T label_B counts', got {raw!r}")
            try:
                c = int(parts[2])
            except ValueError:
                raise ValueError(f"line {lineno}: counts must be an integer") from None
            settings.append(MeasurementSetting(parts[0], parts[1]))
            counts.append(c)
        if "integration_time" not in header:
            raise ValueError("missing '# integration_time = ...' header")
        seed = header.get("seed", "none")
        return cls(
            np.array(counts),
            float(header["integration_time"]),
            float(header.get("accidental_rate", 0.0)),
            float(header.get("flux", "nan")),
            None if seed == "none" else int(seed),
            settings,
        )


def simulate_counts(rho: np.ndarray, flux: float, integration_time: float, accidental_rate: float = 0.0, seed=None) -> CountRecord:
    """Poisson counts for every setting (deterministic for a given seed)."""
    rng = np.random.default_rng(seed)
    probs = np.einsum("ij,sji->s", rho, _PROJ).real
    lam = (flux * np.clip(probs, 0.0, None) + accidental_rate) * integration_time
    counts = rng.poisson(lam)
    return CountRecord(counts, integration_time, accidental_rate, flux, seed if isinstance(seed, (int, np.integer)) else None)


@dataclass(frozen=True)
class ReconstructedState:
    rho: np.ndarray
    method: str
    log_likelihood: float = float("nan")
    physical: bool = True
    iterations: int = 0
    converged: bool = True
    history: tuple[float, ...] = ()


def _rho_from_pauli(c: np.ndarray) -> np.ndarray:
    return np.einsum("k,kij->ij", c, _PAULI2) / 4


def linear_reconstruct(rec: CountRecord) -> ReconstructedState:
    """Exact inversion of the 16x16 design; trace fixed by normalization."""
    n = rec.subtracted()
    if np.linalg.cond(_DESIGN) > 1e12:
        raise np.linalg.LinAlgError("tomography design matrix is singular")
    c = np.linalg.solve(_DESIGN, n)
    if c[0] <= 0:
        raise ValueError("no counts left after accidental subtraction")
    rho = _rho_from_pauli(c / c[0])
    rho = 0.5 * (rho + rho.conj().T)
    physical = bool(np.linalg.eigvalsh(rho).min() >= -1e-9)
    return ReconstructedState(rho, "linear", physical=physical)


# --- maximum likelihood --------------------------------------------------------

_TRIL = np.tril_indices(4)
_OFF = np.tril_indices(4, -1)


def _unpack(x: np.ndarray) -> np.ndarray:
    L = np.zeros((4, 4), dtype=complex)
    L[np.diag_indices(4)] = x[:4]
    L[_OFF] = x[4:10] + 1j * x[10:16]
    return L


def _pack(L: np.ndarray) -> np.ndarray:
    off = L[_OFF]
    return np.concatenate([np.diag(L).real, off.real, off.imag])


def log_likelihood(x: np.ndarray, counts: np.ndarray) -> float:
    """Poisson log-likelihood (up to a constant) of ``rho_unnorm = L L^dagger``."""
    L = _unpack(x)
    lam = np.einsum("ij,sji->s", L @ L.conj().T, _PROJ).real
    lam = np.maximum(lam, 1e-300)
    return float(np.sum(counts * np.log(lam) - lam))


def log_likelihood_grad(x: np.ndarray, counts: np.ndarray) -> np.ndarray:
    L = _unpack(x)
    lam = np.einsum("ij,sji->s", L @ L.conj().T, _PROJ).real
    lam = np.maximum(lam, 1e-300)
    W = np.einsum("s,sij->ij", counts / lam - 1.0, _PROJ)
    K = (L.conj().T @ W).T  # K[a, b] = (L^dagger W)[b, a]
    g = np.zeros(16)
    g[:4] = 2 * np.diag(K).real
    g[4:10] = 2 * K[_OFF].real
    g[10:16] = -2 * K[_OFF].imag
    return g


def _initial_point(rec: CountRecord, n: np.ndarray) -> np.ndarray:
    try:
        rho0 = linear_reconstruct(rec).rho
    except ValueError:
        rho0 = np.eye(4) / 4
    w, v = np.linalg.eigh(rho0)
    w = np.clip(w, 0, None) + 1e-9
    rho0 = (v * w) @ v.conj().T
    rho0 /= np.trace(rho0).real
    probs = np.einsum("ij,sji->s", rho0, _PROJ).real
    scale = n.sum() / max(probs.sum(), 1e-300)
    return _pack(np.linalg.cholesky(rho0 * scale))


def ml_reconstruct(rec: CountRecord, max_iter: int = 10_000, tol: float = 1e-14) -> ReconstructedState:
    """Maximum-likelihood state with ``rho = L L^dagger / Tr``, ``L`` lower triangular.

    Maximized with L-BFGS on the Poisson likelihood, started from the
    positive-projected linear estimate. ``history`` holds the log-likelihood
    after each iteration (count-normalized units); it never decreases.
    """
    n = rec.subtracted()
    total = n.sum()
    if total <= 0:
        raise ValueError("no counts left after accidental subtraction")
    x0 = _initial_point(rec, n)
    # work in sqrt-count units so the objective is O(1)
    s = math.sqrt(total)
    cn = n / total

    def f(y):
        return -log_likelihood(y, cn)

    def g(y):
        return -log_likelihood_grad(y, cn)

    y0 = x0 / s
    history = [-f(y0)]

    def cb(yk):
        history.append(-f(yk))

    res = optimize.minimize(
        f, y0, jac=g, method="L-BFGS-B", callback=cb,
        options={"maxiter": max_iter, "ftol": tol, "gtol": 1e-12, "maxcor": 20},
    )  # fmt: skip
    L = _unpack(res.x)
    rho = L @ L.conj().T
    rho = rho / np.trace(rho).real
    rho = 0.5 * (rho + rho.conj().T)
    ll = log_likelihood(res.x * s, n)
    return ReconstructedState(rho, "max_likelihood", ll, True, int(res.nit), bool(res.success), tuple(history))


@dataclass(frozen=True)
class MonteCarloResult:
    """``mean``/``std`` are floats for scalar metrics, arrays for vector-valued ones."""

    mean: float | np.ndarray
    std: float | np.ndarray
    values: np.ndarray
    failures: int


def _replicate(rec: CountRecord, seq: np.random.SeedSequence, metric: Callable[[np.ndarray], float]):
    rng = np.random.default_rng(seq)
    counts = rng.poisson(rec.counts)
    try:
        rho = ml_reconstruct(rec.with_counts(counts)).rho
    except (ValueError, np.linalg.LinAlgError):
        return None
    return np.asarray(metric(rho), dtype=float)


def monte_carlo(rec: CountRecord, metric: Callable[[np.ndarray], float], n: int = 200, seed=0, workers: int = 1) -> MonteCarloResult:
    """Resample every setting as Poisson(observed), reconstruct, and evaluate ``metric``.

    Replicate ``k`` always uses the ``k``-th child of ``SeedSequence(seed)``,
    so the result does not depend on ``workers``. ``metric`` may return a
    scalar or a fixed-length vector.
    """
    if n < 2:
        raise ValueError("need at least two Monte-Carlo samples")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(n)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            vals = list(ex.map(lambda sq: _replicate(rec, sq, metric), children))
    else:
        vals = [_replicate(rec, sq, metric) for sq in children]
    shape = next((v.shape for v in vals if v is not None), ())
    vals = np.array([np.full(shape, np.nan) if v is None else v for v in vals])
    good = np.all(np.isfinite(vals.reshape(n, -1)), axis=1)
    ok = vals[good]
    if len(ok) < 2:
        raise RuntimeError("Monte-Carlo reconstructions failed")
    mean, std = ok.mean(axis=0), ok.std(axis=0, ddof=1)
    if not shape:
        mean, std = float(mean), float(std)
    return MonteCarloResult(mean, std, vals, int(n - good.sum()))

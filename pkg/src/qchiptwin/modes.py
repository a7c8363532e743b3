"""Dual-rail mode assignment and coincidence post-selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ModeMap", "DEFAULT_MAP", "PostselectionResult", "postselect_qubits", "N_MODES"]

N_MODES = 6
POSTSELECT_FLOOR = 1e-15


@dataclass(frozen=True)
class ModeMap:
    """Mode index of every role on the six-waveguide chip.

    The default keeps the auxiliary (vacuum) modes outermost and each qubit's
    rails adjacent: ``[aux_T, T0, T1, B0, B1, aux_B]``.
    """

    aux_t: int = 0
    t0: int = 1
    t1: int = 2
    b0: int = 3
    b1: int = 4
    aux_b: int = 5

    def __post_init__(self):
        idx = self.as_list()
        if sorted(idx) != list(range(N_MODES)):
            raise ValueError(f"mode map must be a bijection onto 0..{N_MODES - 1}, got {idx}")
        if abs(self.t0 - self.t1) != 1 or abs(self.b0 - self.b1) != 1:
            raise ValueError("rails of each qubit must be adjacent")

    def as_list(self) -> list[int]:
        return [self.aux_t, self.t0, self.t1, self.b0, self.b1, self.aux_b]

    def rails(self, qubit: str) -> tuple[int, int]:
        q = qubit.upper()
        if q == "T":
            return self.t0, self.t1
        if q == "B":
            return self.b0, self.b1
        raise ValueError(f"qubit must be 'T' or 'B', got {qubit!r}")


DEFAULT_MAP = ModeMap()


@dataclass(frozen=True)
class PostselectionResult:
    rho: np.ndarray
    success_probability: float
    assignment_weights: tuple[float, float]


def postselect_qubits(A: np.ndarray, mode_map: ModeMap = DEFAULT_MAP) -> PostselectionResult:
    """Keep events with one photon in each qubit's rail pair.

    ``A[m, n]`` is the amplitude for the signal photon in mode ``m`` and the
    idler in mode ``n``. Signal and idler are told apart at detection, so the
    two assignments (signal in T / signal in B) add incoherently.
    """
    A = np.asarray(A, dtype=complex)
    t = list(mode_map.rails("T"))
    b = list(mode_map.rails("B"))
    psi_tb = A[np.ix_(t, b)].reshape(4)  # [i, j] = A[T_i, B_j]
    psi_bt = A[np.ix_(b, t)].T.reshape(4)  # [i, j] = A[B_j, T_i]
    w_tb = float(np.vdot(psi_tb, psi_tb).real)
    w_bt = float(np.vdot(psi_bt, psi_bt).real)
    p = w_tb + w_bt
    if p < POSTSELECT_FLOOR:
        raise ValueError("no amplitude survives post-selection (one photon per qubit)")
    rho = np.outer(psi_tb, psi_tb.conj()) + np.outer(psi_bt, psi_bt.conj())
    rho /= p
    rho = 0.5 * (rho + rho.conj().T)
    return PostselectionResult(rho, p, (w_tb, w_bt))

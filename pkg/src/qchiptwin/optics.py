"""Transfer matrices for passive and thermo-optically tuned waveguide elements.

Conventions used everywhere in the package:

* ``coupler(eta)`` acts on an adjacent mode pair as
  ``[[sqrt(eta), 1j*sqrt(1-eta)], [1j*sqrt(1-eta), sqrt(eta)]]``, so ``eta`` is
  the bar (same-waveguide) power fraction.
* ``phase(phi)`` multiplies one mode by ``exp(1j*phi)``.
* ``crossing`` swaps two modes exactly (isolation treated as perfect).
* ``mzi(theta)`` is ``coupler(1/2) . phase(theta, upper arm) . coupler(1/2)``.
  Its bar power is ``sin(theta/2)**2``: ``theta = pi`` passes light straight
  through, ``theta = 0`` fully swaps the two waveguides.

Layouts are composed in input-to-output order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "NetworkElement",
    "NetworkLayout",
    "coupler",
    "phase",
    "crossing",
    "mzi",
    "expand_mzi",
    "element_unitary",
    "compose_network",
    "mzi_splitting",
    "is_unitary",
    "UNITARY_TOL",
]

UNITARY_TOL = 1e-12

_KINDS = ("coupler", "phase", "crossing", "mzi")


@dataclass(frozen=True)
class NetworkElement:
    """One element of the waveguide network.

    ``modes`` holds one index for ``phase`` and two adjacent indices (upper
    first) for ``coupler`` and ``mzi``. A ``crossing`` may join any two modes.
    ``value`` is the reflectivity for couplers and the phase in radians for
    ``phase``/``mzi``. ``name`` tags tunable elements (heaters) so a layout
    can be re-evaluated with different phase settings.
    """

    kind: str
    modes: tuple[int, ...]
    value: float = 0.0
    name: str | None = None

    def validate(self, dim: int) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown element kind {self.kind!r}")
        want = 1 if self.kind == "phase" else 2
        if len(self.modes) != want:
            raise ValueError(f"{self.kind} needs {want} mode index(es), got {self.modes}")
        for m in self.modes:
            if not 0 <= m < dim:
                raise ValueError(f"mode index {m} out of range for dim {dim}")
        if self.kind in ("coupler", "mzi"):
            a, b = self.modes
            if b != a + 1:
                raise ValueError(f"{self.kind} must act on adjacent modes (upper first), got {self.modes}")
        if self.kind == "crossing" and self.modes[0] == self.modes[1]:
            raise ValueError("crossing needs two distinct modes")
        if self.kind == "coupler" and not 0.0 <= self.value <= 1.0:
            raise ValueError(f"coupler reflectivity {self.value} outside [0, 1]")
        if not np.isfinite(self.value):
            raise ValueError("element value must be finite")


def coupler(upper: int, eta: float = 0.5, name: str | None = None) -> NetworkElement:
    return NetworkElement("coupler", (upper, upper + 1), float(eta), name)


def phase(mode: int, phi: float, name: str | None = None) -> NetworkElement:
    return NetworkElement("phase", (mode,), float(phi), name)


def crossing(a: int, b: int) -> NetworkElement:
    return NetworkElement("crossing", (a, b))


def mzi(upper: int, theta: float, name: str | None = None) -> NetworkElement:
    return NetworkElement("mzi", (upper, upper + 1), float(theta), name)


def expand_mzi(upper: int, theta: float, eta: float = 0.5, name: str | None = None) -> list[NetworkElement]:
    """MZI as explicit coupler/phase/coupler elements, allowing imperfect couplers."""
    return [coupler(upper, eta), phase(upper, theta, name), coupler(upper, eta)]


@dataclass(frozen=True)
class NetworkLayout:
    mode_count: int
    elements: tuple[NetworkElement, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.mode_count < 1:
            raise ValueError("mode_count must be positive")
        object.__setattr__(self, "elements", tuple(self.elements))
        for e in self.elements:
            e.validate(self.mode_count)

    def __add__(self, other: "NetworkLayout") -> "NetworkLayout":
        if other.mode_count != self.mode_count:
            raise ValueError("cannot join layouts of different mode counts")
        return NetworkLayout(self.mode_count, self.elements + other.elements)

    def with_values(self, values: dict[str, float]) -> "NetworkLayout":
        """Copy with named elements re-set from ``values`` (unlisted names unchanged)."""
        out = []
        for e in self.elements:
            if e.name is not None and e.name in values:
                e = NetworkElement(e.kind, e.modes, float(values[e.name]), e.name)
            out.append(e)
        return NetworkLayout(self.mode_count, tuple(out))

    def names(self) -> list[str]:
        return [e.name for e in self.elements if e.name is not None]


def _block(e: NetworkElement) -> np.ndarray:
    if e.kind == "coupler":
        r = np.sqrt(e.value)
        t = 1j * np.sqrt(1.0 - e.value)
        return np.array([[r, t], [t, r]], dtype=complex)
    if e.kind == "mzi":
        bs = _block(NetworkElement("coupler", e.modes, 0.5))
        return bs @ np.diag([np.exp(1j * e.value), 1.0]) @ bs
    if e.kind == "crossing":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    raise AssertionError(e.kind)


def element_unitary(e: NetworkElement, dim: int) -> np.ndarray:
    """Embed a single element into a ``dim``-mode identity."""
    e.validate(dim)
    u = np.eye(dim, dtype=complex)
    if e.kind == "phase":
        u[e.modes[0], e.modes[0]] = np.exp(1j * e.value)
        return u
    idx = np.array(e.modes)
    u[np.ix_(idx, idx)] = _block(e)
    return u


def _apply_left(u: np.ndarray, e: NetworkElement) -> None:
    # in-place u <- E @ u, touching only the rows E acts on
    if e.kind == "phase":
        u[e.modes[0], :] *= np.exp(1j * e.value)
        return
    a, b = e.modes
    blk = _block(e)
    rows = u[[a, b], :]
    u[[a, b], :] = blk @ rows


def compose_network(layout: NetworkLayout | Iterable[NetworkElement], dim: int | None = None) -> np.ndarray:
    """Total transfer matrix of a layout (first element acts first)."""
    if not isinstance(layout, NetworkLayout):
        if dim is None:
            raise ValueError("dim required when composing a bare element list")
        layout = NetworkLayout(dim, tuple(layout))
    u = np.eye(layout.mode_count, dtype=complex)
    for e in layout.elements:
        _apply_left(u, e)
    return u


def mzi_splitting(theta: float) -> tuple[float, float]:
    """(bar_power, cross_power) of an ideal MZI with internal phase ``theta``."""
    u = _block(NetworkElement("mzi", (0, 1), float(theta)))
    bar = float(abs(u[0, 0]) ** 2)
    cross = float(abs(u[1, 0]) ** 2)
    return bar, cross


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < tol)


def random_layout(dim: int, n: int, rng: np.random.Generator, kinds: Sequence[str] = _KINDS) -> NetworkLayout:
    """Random valid layout, used by property tests and demos."""
    els = []
    for _ in range(n):
        kind = kinds[rng.integers(len(kinds))]
        if kind == "phase":
            els.append(phase(int(rng.integers(dim)), rng.uniform(-np.pi, np.pi)))
        elif kind == "crossing":
            a, b = rng.choice(dim, size=2, replace=False)
            els.append(crossing(int(a), int(b)))
        else:
            up = int(rng.integers(dim - 1))
            val = rng.uniform(0, 1) if kind == "coupler" else rng.uniform(-np.pi, np.pi)
            els.append(NetworkElement(kind, (up, up + 1), float(val)))
    return NetworkLayout(dim, tuple(els))

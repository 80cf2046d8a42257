"""Forward model of a two-path interferometer with a weak spin rotation.

The device: an incoming spin-up beam is split over two paths, path 2 picks
up a tunable phase chi, and path 1 contains a resonant spin rotator that
turns the spin by a small angle alpha with a phase that advances linearly
in time, theta(t) = 2*pi*omega*t + delta.  The forward beam recombines the
paths onto (|path1> + |path2>)/sqrt(2) and a spin analyzer (along +x by
default) selects one spin output.  Counting that output as a function of
time within one rotation period is what the rest of the package simulates
and analyzes.

Intensity conventions: unit input flux, so the time-averaged forward
spin-up-x intensity of the empty device at chi = 0 is 1/2 and each isolated
path contributes 1/8.  A finite interference contrast eta < 1 mixes the
coherent signal with the two isolated-path intensities.

``ideal_intensity`` is the first-order-in-alpha model whose modulation
encodes the weak value w(chi) = <+x|P1|psi(chi)> / <+x|psi(chi)>;
``exact_intensity`` evaluates the full projection chain and agrees with it
to O(alpha^2).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import qubit_core as qc

__all__ = [
    "ProtocolParams",
    "SpinChannel",
    "preselect",
    "initial_state",
    "rf_unitary",
    "interaction_unitary",
    "exact_intensity",
    "ideal_intensity",
    "real_intensity",
    "isolated_path_intensities",
    "empty_interferogram",
]


@dataclass(frozen=True)
class ProtocolParams:
    """Physical settings of one interferometer run.

    chi    relative phase between the two paths, radians
    alpha  spin rotation angle in path 1, radians, 0 <= alpha <= pi
    omega  rotation drive frequency in Hz (ordinary frequency; phases
           always enter as 2*pi*omega*t + delta)
    delta  drive phase offset at t = 0
    eta    interference contrast (fringe visibility), 0 <= eta <= 1
    """

    chi: float = 0.0
    alpha: float = np.pi / 9
    omega: float = 60e3
    delta: float = 0.0
    eta: float = 0.79

    def __post_init__(self) -> None:
        for name in ("chi", "alpha", "omega", "delta", "eta"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if not 0.0 <= self.alpha <= np.pi:
            raise ValueError(f"alpha must lie in [0, pi], got {self.alpha!r}")
        if self.omega <= 0.0:
            raise ValueError(f"omega must be positive, got {self.omega!r}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta!r}")

    @property
    def period(self) -> float:
        """One drive period 1/omega in seconds."""
        return 1.0 / self.omega


class SpinChannel(enum.Enum):
    """Spin analyzer setting for the forward beam."""

    UP_X = "up_x"
    DOWN_X = "down_x"
    UP_Y = "up_y"
    DOWN_Y = "down_y"
    UP_Z = "up_z"
    DOWN_Z = "down_z"

    @property
    def state(self) -> np.ndarray:
        return _CHANNEL_STATES[self]


_CHANNEL_STATES = {
    SpinChannel.UP_X: qc.PLUS_X,
    SpinChannel.DOWN_X: qc.MINUS_X,
    SpinChannel.UP_Y: qc.PLUS_Y,
    SpinChannel.DOWN_Y: qc.MINUS_Y,
    SpinChannel.UP_Z: qc.KET_0,
    SpinChannel.DOWN_Z: qc.KET_1,
}


def preselect(chi: float) -> np.ndarray:
    """Path state behind the first splitter, (|1> + e^{i chi} |2>)/sqrt(2)."""
    return qc.relative_phase_state(chi)


def initial_state(chi: float) -> np.ndarray:
    """Path (x) spin product state entering the rotator region, spin up-z."""
    return qc.tensor(preselect(chi), qc.KET_0)


def _theta(t, params: ProtocolParams):
    return 2.0 * np.pi * params.omega * np.asarray(t, dtype=float) + params.delta


def rf_unitary(t: float, params: ProtocolParams) -> np.ndarray:
    """Spin rotation by alpha with drive phase theta(t) = 2 pi omega t + delta.

    Matrix form: diagonal cos(alpha/2), off-diagonals
    -i sin(alpha/2) e^{-+ i theta}.  This phase convention is the one under
    which the exact projection chain reproduces ``ideal_intensity`` to
    O(alpha^2); see the module docstring.
    """
    th = float(_theta(t, params))
    c = np.cos(params.alpha / 2)
    s = np.sin(params.alpha / 2)
    return np.array(
        [
            [c, -1j * s * np.exp(-1j * th)],
            [-1j * s * np.exp(1j * th), c],
        ]
    )


def interaction_unitary(t: float, params: ProtocolParams) -> np.ndarray:
    """Composite 4x4 evolution: rotator in path 1, identity in path 2.

    Basis order (path1 up, path1 down, path2 up, path2 down).
    """
    u = np.eye(4, dtype=complex)
    u[:2, :2] = rf_unitary(t, params)
    return u


def exact_intensity(
    t, params: ProtocolParams, channel: SpinChannel = SpinChannel.UP_X
):
    """Forward-beam intensity from the full projection chain.

    Computes |<+x, s| U(t) |psi(chi), up_z>|^2 for the analyzer state s of
    the requested spin channel.  Accepts scalar or array t.
    """
    t_arr = np.asarray(t, dtype=float)
    spin_bra = channel.state.conj()
    psi_path = preselect(params.chi)
    # <+x|P1|psi> and <+x|P2|psi>: path amplitudes feeding the two spin routes
    a1 = np.conj(qc.PLUS_X[0]) * psi_path[0]
    a2 = np.conj(qc.PLUS_X[1]) * psi_path[1]

    def one(time: float) -> float:
        u = rf_unitary(time, params)
        spin_rotated = u @ qc.KET_0
        amp = a1 * (spin_bra @ spin_rotated) + a2 * spin_bra[0]
        return float(abs(amp) ** 2)

    if t_arr.ndim == 0:
        return one(float(t_arr))
    return np.array([one(x) for x in t_arr.ravel()]).reshape(t_arr.shape)


def ideal_intensity(t, params: ProtocolParams):
    """First-order forward intensity, (p/2) * (1 + alpha Im(w e^{i theta})).

    p = |<+x|psi(chi)>|^2 is the path post-selection probability and w the
    weak value of the path-1 projector.  Implemented through the finite
    product p*w = (1 + e^{-i chi})/4 so chi = pi (where w itself diverges
    and the intensity vanishes) is handled smoothly.
    """
    th = _theta(t, params)
    p = (1.0 + np.cos(params.chi)) / 2.0
    pw = (1.0 + np.exp(-1j * params.chi)) / 4.0
    out = 0.5 * p + 0.5 * params.alpha * np.imag(pw * np.exp(1j * th))
    return out if np.ndim(t) else float(out)


def isolated_path_intensities(t, params: ProtocolParams):
    """Forward spin-up-x intensities with only one path open, (path1, path2).

    Path 1 carries the rotator modulation, (1 - alpha sin theta)/8; path 2
    is flat at 1/8.
    """
    th = _theta(t, params)
    i1 = (1.0 - params.alpha * np.sin(th)) / 8.0
    i2 = np.full_like(np.asarray(th, dtype=float), 1.0 / 8.0)
    if np.ndim(t):
        return i1, i2
    return float(i1), float(i2)


def real_intensity(t, params: ProtocolParams):
    """Finite-contrast forward intensity.

    eta * ideal + (1 - eta) * (path1 + path2): the coherent signal weighted
    by the contrast plus the incoherent sum of isolated-path intensities.
    """
    i1, i2 = isolated_path_intensities(t, params)
    out = params.eta * ideal_intensity(t, params) + (1.0 - params.eta) * (
        np.asarray(i1) + np.asarray(i2)
    )
    return out if np.ndim(t) else float(out)


def empty_interferogram(chi, eta: float, extra_phase: float = 0.0):
    """Normalized rotator-off fringe, (1 + eta cos(chi - extra_phase))/2.

    extra_phase shifts the reading so that extra_phase = pi/2 yields the
    (1 + eta sin chi)/2 pattern of post-selection along +y.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta!r}")
    out = 0.5 * (1.0 + eta * np.cos(np.asarray(chi, dtype=float) - extra_phase))
    return out if np.ndim(chi) else float(out)

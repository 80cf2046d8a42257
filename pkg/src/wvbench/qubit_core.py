"""Two-level quantum mechanics for pre- and post-selected weak measurements.

Conventions used across the package:

* basis kets are column vectors with ``|0> = (1, 0)`` and ``|1> = (0, 1)``;
  the interferometer paths and the spin-z states both use this ordering
* the preselected state is ``(|0> + e^{i chi} |1>)/sqrt(2)`` (phase on the
  second component)
* composite path (x) spin vectors are ordered (path1 up, path1 down,
  path2 up, path2 down), i.e. ``numpy.kron(path, spin)``

All states and operators are plain complex numpy arrays.  Helper
constructors normalize their output; functions that consume states check
normalization and finiteness so that NaN or Inf never propagates silently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ID2",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "KET_0",
    "KET_1",
    "PLUS_X",
    "MINUS_X",
    "PLUS_Y",
    "MINUS_Y",
    "NearOrthogonalPostselection",
    "WeakValueResult",
    "normalize",
    "bloch_state",
    "axis_operator",
    "relative_phase_state",
    "projector_from_state",
    "tensor",
    "apply",
    "inner",
    "weak_value",
    "commutator_expectation_direct",
    "commutator_via_weak_value",
    "scalar_identity_sides",
]

#: squared-overlap threshold below which post-selection is refused
ORTHOGONALITY_EPS = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    a.setflags(write=False)
    return a


ID2 = _frozen(np.eye(2))
PAULI_X = _frozen([[0, 1], [1, 0]])
PAULI_Y = _frozen([[0, -1j], [1j, 0]])
PAULI_Z = _frozen([[1, 0], [0, -1]])

KET_0 = _frozen([1, 0])
KET_1 = _frozen([0, 1])
PLUS_X = _frozen([1 / np.sqrt(2), 1 / np.sqrt(2)])
MINUS_X = _frozen([1 / np.sqrt(2), -1 / np.sqrt(2)])
PLUS_Y = _frozen([1 / np.sqrt(2), 1j / np.sqrt(2)])
MINUS_Y = _frozen([1 / np.sqrt(2), -1j / np.sqrt(2)])


class NearOrthogonalPostselection(ValueError):
    """Pre- and post-selected states are too close to orthogonal to divide by."""


@dataclass(frozen=True)
class WeakValueResult:
    """Weak value together with the post-selection probability it came with."""

    value: complex
    postselection_probability: float


def _as_array(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=complex)
    if not (np.all(np.isfinite(a.real)) and np.all(np.isfinite(a.imag))):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _as_state(x, name: str = "state") -> np.ndarray:
    a = _as_array(x, name)
    if a.ndim != 1:
        raise ValueError(f"{name} must be a vector, got shape {a.shape}")
    n = np.linalg.norm(a)
    if abs(n - 1.0) > 1e-9:
        raise ValueError(f"{name} is not normalized (norm={n!r})")
    return a


def _as_operator(x, dim: int, name: str = "operator") -> np.ndarray:
    a = _as_array(x, name)
    if a.shape != (dim, dim):
        raise ValueError(f"{name} must be {dim}x{dim}, got shape {a.shape}")
    return a


def normalize(state) -> np.ndarray:
    """Return ``state / ||state||`` as a complex vector.

    Raises ValueError for the zero vector or non-finite input.
    """
    a = _as_array(state, "state")
    n = np.linalg.norm(a)
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return a / n


def bloch_state(theta: float, phi: float) -> np.ndarray:
    """Qubit state at polar angle theta, azimuth phi on the Bloch sphere."""
    return np.array(
        [np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], dtype=complex
    )


def axis_operator(nx: float, ny: float, nz: float) -> np.ndarray:
    """Spin observable n.sigma for a unit axis n = (nx, ny, nz)."""
    n = np.array([nx, ny, nz], dtype=float)
    length = np.linalg.norm(n)
    if not np.isfinite(length) or length == 0.0:
        raise ValueError("axis must be a finite non-zero vector")
    n /= length
    return n[0] * PAULI_X + n[1] * PAULI_Y + n[2] * PAULI_Z


def relative_phase_state(chi: float) -> np.ndarray:
    """Equal-weight superposition ``(|0> + e^{i chi} |1>)/sqrt(2)``."""
    return np.array([1.0, np.exp(1j * chi)], dtype=complex) / np.sqrt(2)


def projector_from_state(state) -> np.ndarray:
    """Rank-1 projector |s><s| onto a normalized state."""
    s = _as_state(state)
    return np.outer(s, s.conj())


def tensor(a, b) -> np.ndarray:
    """Kronecker product, first factor = slower index (path before spin)."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def apply(op, state) -> np.ndarray:
    """Matrix-vector product op @ state (no renormalization)."""
    s = _as_array(state, "state")
    o = _as_operator(op, s.shape[0])
    return o @ s


def inner(a, b) -> complex:
    """Inner product <a|b>, conjugating the first argument."""
    av = _as_array(a, "a")
    bv = _as_array(b, "b")
    if av.shape != bv.shape:
        raise ValueError(f"shape mismatch {av.shape} vs {bv.shape}")
    return complex(np.vdot(av, bv))


def weak_value(
    pre, post, op, eps: float = ORTHOGONALITY_EPS
) -> WeakValueResult:
    """Weak value <post|op|pre> / <post|pre> of an observable.

    Parameters
    ----------
    pre, post:
        Normalized state vectors of equal dimension.
    op:
        Square matrix acting on that space.
    eps:
        Post-selection probability |<post|pre>|^2 below which
        NearOrthogonalPostselection is raised instead of dividing.

    Returns
    -------
    WeakValueResult
        The (generally complex) weak value and |<post|pre>|^2.
    """
    pre_v = _as_state(pre, "pre")
    post_v = _as_state(post, "post")
    if pre_v.shape != post_v.shape:
        raise ValueError("pre and post states have different dimensions")
    o = _as_operator(op, pre_v.shape[0])

    overlap = complex(np.vdot(post_v, pre_v))
    prob = abs(overlap) ** 2
    if prob < eps:
        raise NearOrthogonalPostselection(
            f"post-selection probability {prob:.3e} below threshold {eps:.1e}"
        )
    value = complex(np.vdot(post_v, o @ pre_v)) / overlap
    if not (np.isfinite(value.real) and np.isfinite(value.imag)):
        raise ValueError("weak value evaluated to a non-finite number")
    return WeakValueResult(value=value, postselection_probability=float(prob))


def commutator_expectation_direct(op_a, op_b, state) -> complex:
    """<state|[A, B]|state> by plain matrix arithmetic.

    This is the reference route for the weak-value decomposition below; the
    two must agree for dichotomic observables built from rank-1 projectors.
    """
    psi = _as_state(state)
    dim = psi.shape[0]
    a = _as_operator(op_a, dim, "op_a")
    b = _as_operator(op_b, dim, "op_b")
    comm = a @ b - b @ a
    return complex(np.vdot(psi, comm @ psi))


def _check_rank1_projector(p: np.ndarray, name: str) -> None:
    if not np.allclose(p, p.conj().T, atol=1e-10):
        raise ValueError(f"{name} is not Hermitian")
    if not np.allclose(p @ p, p, atol=1e-10):
        raise ValueError(f"{name} is not idempotent")
    if abs(np.trace(p) - 1.0) > 1e-10:
        raise ValueError(f"{name} is not rank-1 (trace != 1)")


def commutator_via_weak_value(
    state, proj_a, post_b, eps: float = ORTHOGONALITY_EPS
) -> complex:
    """<state|[A, B]|state> from one imaginary weak value.

    For dichotomic observables A = 2P_a - 1 and B = 2|b><b| - 1 the
    commutator expectation reduces to

        -8i * |<b|state>|^2 * Im( <b|P_a|state> / <b|state> )

    because <state|P_a P_b|state> = conj(w) * |<b|state>|^2 where w is the
    weak value of P_a between preselection ``state`` and post-selection
    ``b``.  The returned number is purely imaginary up to rounding.
    """
    psi = _as_state(state)
    post = _as_state(post_b, "post_b")
    p_a = _as_operator(proj_a, psi.shape[0], "proj_a")
    _check_rank1_projector(p_a, "proj_a")

    wv = weak_value(psi, post, p_a, eps=eps)
    return -8j * wv.postselection_probability * wv.value.imag


def scalar_identity_sides(chi: float, eps: float = ORTHOGONALITY_EPS) -> tuple[float, float]:
    """Both sides of the sin(chi) commutator identity, computed separately.

    Left: -4 |<+x|psi(chi)>|^2 Im(w) with w the weak value of |0><0|
    between psi(chi) and |+x>.  Right: 2 |<+y|psi(chi)>|^2 - 1.  Both equal
    sin(chi) exactly; returning them as a pair keeps the two routes
    independent so tests can compare them.
    """
    psi = relative_phase_state(chi)
    wv = weak_value(psi, PLUS_X, projector_from_state(KET_0), eps=eps)
    lhs = -4.0 * wv.postselection_probability * wv.value.imag
    rhs = 2.0 * abs(inner(PLUS_Y, psi)) ** 2 - 1.0
    return float(lhs), float(rhs)

"""Truncated Fock-space linear algebra for a cavity mode coupled to a qubit.

Operators and states are dense complex arrays wrapped with the space they
live on.  Factor spaces (cavity alone, qubit alone) combine into a composite
space through :func:`tensor`; the Kronecker ordering is inferred from the
argument order and recorded so later contractions stay consistent.

Conventions (see :mod:`sqcat.constants`): X = (a + a^dag)/2, P = i(a^dag - a)/2,
D(alpha) = exp(alpha a^dag - alpha^* a), S(r, theta) = exp((z^* a^2 - z a^dag^2)/2)
with z = r exp(i theta), so theta = 0 and r > 0 compress X.  The qubit basis is
(g, e) with sigma_z = diag(+1, -1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg import expm


class TruncationWarning(UserWarning):
    """A requested object does not comfortably fit the truncated space."""


class DegenerateStateError(ValueError):
    """A state request whose normalization vanishes (e.g. odd cat at alpha=0)."""


@dataclass(frozen=True)
class CavitySpace:
    """Marker for the cavity factor with `dim` Fock levels."""

    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("cavity dimension must be at least 2")


@dataclass(frozen=True)
class QubitSpace:
    """Marker for the two-level qubit factor, basis ordered (g, e)."""

    @property
    def dim(self) -> int:
        return 2


@dataclass(frozen=True)
class SpaceSpec:
    """Composite cavity-qubit space with a fixed Kronecker ordering.

    ordering "cavity-first" means composite index = i_cavity * 2 + i_qubit
    (the cavity is the left Kronecker factor); "qubit-first" is the reverse.
    """

    cavity_dim: int
    qubit_levels: int = 2
    ordering: str = "cavity-first"

    def __post_init__(self):
        if self.cavity_dim < 2:
            raise ValueError("cavity_dim must be at least 2")
        if self.qubit_levels != 2:
            raise ValueError("qubit_levels is fixed at 2")
        if self.ordering not in ("cavity-first", "qubit-first"):
            raise ValueError(f"unknown ordering {self.ordering!r}")

    @property
    def dim(self) -> int:
        return self.qubit_levels * self.cavity_dim

    @property
    def cavity(self) -> CavitySpace:
        return CavitySpace(self.cavity_dim)

    @property
    def qubit(self) -> QubitSpace:
        return QubitSpace()

    def factors(self):
        """Factor markers in Kronecker order."""
        if self.ordering == "cavity-first":
            return (self.cavity, self.qubit)
        return (self.qubit, self.cavity)


Space = Union[CavitySpace, QubitSpace, SpaceSpec]


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Operator:
    """Dense operator on `space`."""

    matrix: np.ndarray
    space: Space

    def __post_init__(self):
        mat = _freeze(self.matrix)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("operator matrix must be square")
        if mat.shape[0] != self.space.dim:
            raise ValueError("operator dimension does not match its space")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.space)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            _check_same_space(self.space, other.space)
            return Operator(self.matrix @ other.matrix, self.space)
        if isinstance(other, PureState):
            _check_same_space(self.space, other.space)
            return PureState(self.matrix @ other.amplitudes, other.space)
        return NotImplemented


@dataclass(frozen=True)
class PureState:
    """State vector on `space`.  Factories return unit norm."""

    amplitudes: np.ndarray
    space: Space

    def __post_init__(self):
        amp = _freeze(np.asarray(self.amplitudes).reshape(-1))
        if amp.shape[0] != self.space.dim:
            raise ValueError("state dimension does not match its space")
        if not np.all(np.isfinite(amp.view(float))):
            raise ValueError("state amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "PureState":
        n = self.norm
        if n < 1e-12:
            raise DegenerateStateError("cannot normalize a null state")
        return PureState(self.amplitudes / n, self.space)

    def to_density(self) -> "DensityMatrix":
        amp = self.amplitudes
        return DensityMatrix(np.outer(amp, amp.conj()), self.space)


@dataclass(frozen=True)
class DensityMatrix:
    """Density operator on `space`; Hermitian with unit trace."""

    matrix: np.ndarray
    space: Space

    def __post_init__(self):
        mat = _freeze(self.matrix)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("density matrix must be square")
        if mat.shape[0] != self.space.dim:
            raise ValueError("density matrix dimension does not match its space")
        herm_defect = float(np.max(np.abs(mat - mat.conj().T)))
        if herm_defect > 1e-8:
            raise ValueError(f"density matrix not Hermitian (defect {herm_defect:.2e})")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > 1e-6:
            raise ValueError(f"density matrix trace {tr:.8f} != 1")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


State = Union[PureState, DensityMatrix]


def _check_same_space(a: Space, b: Space):
    if a != b:
        raise ValueError(f"space mismatch: {a} vs {b}")


def _destroy(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def _displacement(dim: int, alpha: complex) -> np.ndarray:
    a = _destroy(dim)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def _squeeze(dim: int, r: float, theta: float) -> np.ndarray:
    a = _destroy(dim)
    z = r * np.exp(1j * theta)
    return expm((np.conj(z) * (a @ a) - z * (a.conj().T @ a.conj().T)) / 2.0)


_PAULI = {
    "pauli_x": np.array([[0, 1], [1, 0]], dtype=complex),
    "pauli_y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "pauli_z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_CAVITY_KINDS = ("annihilate", "create", "quad_X", "quad_P", "number",
                 "displacement", "squeeze", "parity")


def check_displacement_headroom(alpha: complex, cavity_dim: int):
    """Warn when a displacement's photon distribution nears the truncation edge."""
    load = abs(alpha) ** 2 + 5.0 * abs(alpha)
    if load > cavity_dim:
        warnings.warn(
            f"displacement alpha={alpha:.3g} needs ~{load:.0f} Fock levels "
            f"but cavity_dim={cavity_dim}",
            TruncationWarning, stacklevel=3)


def _cavity_operator(kind: str, dim: int, params: dict) -> np.ndarray:
    a = _destroy(dim)
    if kind == "annihilate":
        return a
    if kind == "create":
        return a.conj().T
    if kind == "quad_X":
        return (a + a.conj().T) / 2.0
    if kind == "quad_P":
        return 1j * (a.conj().T - a) / 2.0
    if kind == "number":
        return a.conj().T @ a
    if kind == "parity":
        return np.diag((-1.0 + 0j) ** np.arange(dim))
    if kind == "displacement":
        alpha = complex(params.pop("alpha"))
        check_displacement_headroom(alpha, dim)
        return _displacement(dim, alpha)
    if kind == "squeeze":
        r = float(params.pop("r"))
        theta = float(params.pop("theta", 0.0))
        return _squeeze(dim, r, theta)
    raise ValueError(f"unknown cavity operator kind {kind!r}")


def make_operator(kind: str, space: Space, **params) -> Operator:
    """Build a named operator on a factor space or embedded in a composite.

    Cavity kinds: annihilate, create, quad_X, quad_P, number, parity,
    displacement (param alpha), squeeze (params r, theta).  Qubit kinds:
    pauli_x, pauli_y, pauli_z.  identity works on any space.  On a
    SpaceSpec the factor operator is embedded with identity on the other
    factor, respecting the spec's ordering.
    """
    if kind == "identity":
        if params:
            raise ValueError("identity takes no parameters")
        return Operator(np.eye(space.dim, dtype=complex), space)

    if isinstance(space, CavitySpace):
        if kind in _PAULI:
            raise ValueError("Pauli operators act on the qubit factor only")
        mat = _cavity_operator(kind, space.dim, dict(params))
        return Operator(mat, space)

    if isinstance(space, QubitSpace):
        if kind not in _PAULI:
            raise ValueError(f"kind {kind!r} is not a qubit operator")
        if params:
            raise ValueError("Pauli kinds take no parameters")
        return Operator(_PAULI[kind].copy(), space)

    if isinstance(space, SpaceSpec):
        if kind in _PAULI:
            factor = _PAULI[kind]
            if params:
                raise ValueError("Pauli kinds take no parameters")
            return Operator(embed_qubit(factor, space), space)
        factor = _cavity_operator(kind, space.cavity_dim, dict(params))
        return Operator(embed_cavity(factor, space), space)

    raise TypeError(f"unsupported space {space!r}")


def embed_cavity(mat: np.ndarray, spec: SpaceSpec) -> np.ndarray:
    """Kronecker-embed a cavity-factor matrix into the composite space."""
    eye_q = np.eye(2, dtype=complex)
    if spec.ordering == "cavity-first":
        return np.kron(mat, eye_q)
    return np.kron(eye_q, mat)


def embed_qubit(mat: np.ndarray, spec: SpaceSpec) -> np.ndarray:
    """Kronecker-embed a qubit-factor matrix into the composite space."""
    eye_c = np.eye(spec.cavity_dim, dtype=complex)
    if spec.ordering == "cavity-first":
        return np.kron(eye_c, mat)
    return np.kron(mat, eye_c)


def _cavity_state(kind: str, dim: int, params: dict) -> np.ndarray:
    if kind == "vacuum":
        vec = np.zeros(dim, dtype=complex)
        vec[0] = 1.0
        return vec
    if kind == "fock":
        n = int(params.pop("n"))
        if not 0 <= n < dim:
            raise ValueError(f"Fock level {n} outside [0, {dim})")
        vec = np.zeros(dim, dtype=complex)
        vec[n] = 1.0
        return vec
    if kind == "coherent":
        alpha = complex(params.pop("alpha"))
        if alpha == 0:
            return _cavity_state("vacuum", dim, {})
        check_displacement_headroom(alpha, dim)
        n = np.arange(dim)
        # log-domain amplitudes to stay stable at large n
        log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, dim)))))
        vec = np.exp(n * np.log(complex(alpha)) - log_fact / 2.0
                     - abs(alpha) ** 2 / 2.0)
        return vec / np.linalg.norm(vec)
    if kind == "cat":
        alpha = complex(params.pop("alpha"))
        parity = _parse_parity(params.pop("parity"))
        plus = _cavity_state("coherent", dim, {"alpha": alpha})
        minus = _cavity_state("coherent", dim, {"alpha": -alpha})
        vec = plus + parity * minus
        nrm = np.linalg.norm(vec)
        if nrm < 1e-6:
            raise DegenerateStateError(
                f"cat with alpha={alpha:.3g}, parity={parity:+d} is null")
        return vec / nrm
    if kind == "squeezed_cat":
        gamma = complex(params.pop("gamma"))
        r = float(params.pop("r"))
        theta = float(params.pop("theta", 0.0))
        parity = params.pop("parity")
        cat = _cavity_state("cat", dim, {"alpha": gamma, "parity": parity})
        vec = _squeeze(dim, r, theta) @ cat
        nrm = np.linalg.norm(vec)
        if nrm < 1.0 - 1e-9:
            warnings.warn(
                f"squeezed cat lost norm {1 - nrm:.2e} to truncation",
                TruncationWarning, stacklevel=3)
        return vec / nrm
    raise ValueError(f"unknown cavity state kind {kind!r}")


def _parse_parity(parity) -> int:
    if parity in (+1, -1):
        return int(parity)
    if parity in ("even", "+"):
        return +1
    if parity in ("odd", "-"):
        return -1
    raise ValueError(f"parity must be +-1 or 'even'/'odd', got {parity!r}")


def make_state(kind: str, space: Space, **params) -> PureState:
    """Build a named normalized state on a factor space.

    Cavity kinds (on CavitySpace): vacuum, fock (n), coherent (alpha),
    cat (alpha, parity), squeezed_cat (gamma, r, theta, parity).  The
    squeezed cat is S(r, theta) applied to cat(gamma, parity).  Qubit kinds
    (on QubitSpace): qubit with which in {g, e} or explicit amplitudes
    (cg, ce).  Composite states are assembled with :func:`tensor`.
    """
    if isinstance(space, CavitySpace):
        vec = _cavity_state(kind, space.dim, dict(params))
        return PureState(vec, space)
    if isinstance(space, QubitSpace):
        if kind != "qubit":
            raise ValueError(f"kind {kind!r} is not a qubit state")
        p = dict(params)
        if "which" in p:
            which = p.pop("which")
            if p:
                raise ValueError(f"unexpected parameters {sorted(p)}")
            vec = {"g": np.array([1, 0], dtype=complex),
                   "e": np.array([0, 1], dtype=complex)}.get(which)
            if vec is None:
                raise ValueError(f"which must be 'g' or 'e', got {which!r}")
        else:
            vec = np.array([complex(p.pop("cg")), complex(p.pop("ce"))])
            if p:
                raise ValueError(f"unexpected parameters {sorted(p)}")
            nrm = np.linalg.norm(vec)
            if nrm < 1e-12:
                raise DegenerateStateError("null qubit amplitudes")
            vec = vec / nrm
        return PureState(vec, space)
    raise TypeError(
        "make_state builds factor states; combine them with tensor()")


def _compose_spec(sa: Space, sb: Space) -> SpaceSpec:
    if isinstance(sa, CavitySpace) and isinstance(sb, QubitSpace):
        return SpaceSpec(sa.dim, ordering="cavity-first")
    if isinstance(sa, QubitSpace) and isinstance(sb, CavitySpace):
        return SpaceSpec(sb.dim, ordering="qubit-first")
    raise ValueError(
        "tensor operands must be one cavity factor and one qubit factor")


def tensor(a, b):
    """Kronecker product of two factor-space objects, ordering by argument order."""
    if isinstance(a, Operator) and isinstance(b, Operator):
        spec = _compose_spec(a.space, b.space)
        return Operator(np.kron(a.matrix, b.matrix), spec)
    if isinstance(a, PureState) and isinstance(b, PureState):
        spec = _compose_spec(a.space, b.space)
        return PureState(np.kron(a.amplitudes, b.amplitudes), spec)
    raise TypeError("tensor combines two Operators or two PureStates")


def expectation(state: State, op: Operator) -> complex:
    """<psi|op|psi> for pure states, Tr(rho op) for density matrices."""
    if op.dim != state.dim:
        raise ValueError("state and operator dimensions differ")
    if isinstance(state, PureState):
        amp = state.amplitudes
        return complex(amp.conj() @ (op.matrix @ amp))
    return complex(np.trace(state.matrix @ op.matrix))


def state_fidelity(a: State, b: State) -> float:
    """Overlap fidelity; |<a|b>|^2 pure-pure, <psi|rho|psi> pure-mixed."""
    if a.dim != b.dim:
        raise ValueError("state dimensions differ")
    if isinstance(a, PureState) and isinstance(b, PureState):
        return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
    if isinstance(a, PureState) and isinstance(b, DensityMatrix):
        amp = a.amplitudes
        return float(np.real(amp.conj() @ (b.matrix @ amp)))
    if isinstance(a, DensityMatrix) and isinstance(b, PureState):
        return state_fidelity(b, a)
    raise ValueError("mixed-mixed fidelity is unsupported")


def unitarity_defect(op: Operator, exclude_top_fraction: float = 0.1) -> float:
    """Max |U^dag U - I| away from the truncation corner.

    Rows and columns whose cavity Fock index lies in the top
    `exclude_top_fraction` of levels are excluded, since truncation makes
    every displacement-like unitary leak there.
    """
    defect = op.matrix.conj().T @ op.matrix - np.eye(op.dim)
    space = op.space
    if isinstance(space, QubitSpace):
        return float(np.max(np.abs(defect)))
    if isinstance(space, CavitySpace):
        keep = int(math.ceil(space.dim * (1.0 - exclude_top_fraction)))
        return float(np.max(np.abs(defect[:keep, :keep])))
    keep_c = int(math.ceil(space.cavity_dim * (1.0 - exclude_top_fraction)))
    if space.ordering == "cavity-first":
        keep_idx = np.arange(space.dim).reshape(space.cavity_dim, 2)[:keep_c].ravel()
    else:
        keep_idx = np.arange(space.dim).reshape(2, space.cavity_dim)[:, :keep_c].ravel()
    sub = defect[np.ix_(keep_idx, keep_idx)]
    return float(np.max(np.abs(sub)))


def _composite_reshape(mat: np.ndarray, spec: SpaceSpec):
    """Reshape a composite matrix to (d1, d2, d1, d2) in Kronecker factor order."""
    d1, d2 = (f.dim for f in spec.factors())
    return mat.reshape(d1, d2, d1, d2)


def partial_trace(state: State, keep: str) -> DensityMatrix:
    """Reduce a composite state to its cavity or qubit factor."""
    if not isinstance(state.space, SpaceSpec):
        raise ValueError("partial_trace needs a composite-space state")
    spec = state.space
    rho = state.to_density().matrix if isinstance(state, PureState) else state.matrix
    t = _composite_reshape(rho, spec)
    first = spec.factors()[0]
    first_is_cavity = isinstance(first, CavitySpace)
    keep_first = (keep == "cavity") == first_is_cavity
    if keep not in ("cavity", "qubit"):
        raise ValueError("keep must be 'cavity' or 'qubit'")
    if keep_first:
        red = np.einsum("abcb->ac", t)
        sub = first
    else:
        red = np.einsum("abad->bd", t)
        sub = spec.factors()[1]
    red = (red + red.conj().T) / 2.0
    return DensityMatrix(red, CavitySpace(sub.dim) if isinstance(sub, CavitySpace)
                         else QubitSpace())


def qubit_basis_states(spec: SpaceSpec):
    """Computational qubit vectors (g, e) as length-2 arrays, for projections."""
    return np.eye(2, dtype=complex)


def project_qubit(state: PureState, outcome: str):
    """Project the qubit factor onto g or e.

    Returns (probability, normalized PureState).  Raises when the outcome
    probability is below 1e-6 (the branch is essentially absent).
    """
    if not isinstance(state.space, SpaceSpec):
        raise ValueError("project_qubit needs a composite-space state")
    spec = state.space
    idx = {"g": 0, "e": 1}.get(outcome)
    if idx is None:
        raise ValueError("outcome must be 'g' or 'e'")
    if spec.ordering == "cavity-first":
        branch = state.amplitudes.reshape(spec.cavity_dim, 2)[:, idx]
    else:
        branch = state.amplitudes.reshape(2, spec.cavity_dim)[idx]
    prob = float(np.sum(np.abs(branch) ** 2))
    if prob < 1e-6:
        raise DegenerateStateError(
            f"projection onto {outcome!r} has probability {prob:.2e}")
    cav = PureState(branch / math.sqrt(prob), CavitySpace(spec.cavity_dim))
    return prob, cav


def cavity_vector(state: PureState, qubit_amplitudes: np.ndarray) -> np.ndarray:
    """Contract the qubit factor with fixed amplitudes, returning a cavity vector."""
    spec = state.space
    if not isinstance(spec, SpaceSpec):
        raise ValueError("cavity_vector needs a composite-space state")
    q = np.asarray(qubit_amplitudes, dtype=complex).reshape(2)
    if spec.ordering == "cavity-first":
        return state.amplitudes.reshape(spec.cavity_dim, 2) @ q.conj()
    return q.conj() @ state.amplitudes.reshape(2, spec.cavity_dim)

"""Qubit rotations, conditional displacements, and the compression gate pair.

The two compression gates are exp(i u P sigma_x) and exp(i v X sigma_y).
Both are realized as an echo conditional displacement sandwiched between
qubit rotations; the sandwich leaves a residual qubit flip (for the P-type
gate) or a quarter-turn global phase (for the X-type gate), and both
residues are cancelled explicitly so the returned operators equal the
exponential forms exactly.

Pulse-level ECD schedules model the gate as two constant-lever dwell
segments with a mid-sequence echo pi pulse; the echo refocuses the bare
dispersive rotation and any static qubit detuning.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from sqcat.hilbert import (
    Operator,
    QubitSpace,
    Space,
    SpaceSpec,
    _displacement,
    _PAULI,
    check_displacement_headroom,
    embed_cavity,
    embed_qubit,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DeviceParams:
    """Physical parameters of the cavity-qubit device.

    chi and kerr are angular frequencies (rad/s); times are seconds.  The
    dispersive interaction is (chi/2) sigma_z (a^dag a) with sigma_z =
    diag(+1, -1) on (g, e), so an excited qubit advances the cavity phase
    at chi/2.  lever_alpha0 is the constant ECD dwell displacement; its
    default makes a unit conditional displacement take ecd_unit_duration.
    The cavity self-Kerr is recorded but enters simulations only when a
    noise configuration asks for it.
    """

    chi: float = TWO_PI * 40e3
    kerr: float = TWO_PI * 10.0
    t1_cavity: float = 260e-6
    tphi_cavity: float = 5e-3
    t1_qubit: float = 20e-6
    t2e_qubit: float = 20e-6
    ecd_unit_duration: float = 688e-9
    lever_alpha0: float = field(default=0.0)
    readout_p_gg: float = 0.986
    readout_p_ee: float = 0.95
    thermal_population: float = 0.015

    def __post_init__(self):
        if self.lever_alpha0 == 0.0:
            object.__setattr__(self, "lever_alpha0",
                               1.0 / (self.chi * self.ecd_unit_duration))
        for name in ("chi", "t1_cavity", "tphi_cavity", "t1_qubit",
                     "t2e_qubit", "ecd_unit_duration", "lever_alpha0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("readout_p_gg", "readout_p_ee", "thermal_population"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.pure_dephasing_rate_qubit < -1e-9:
            raise ValueError("t2e_qubit exceeds the 2*t1_qubit limit")

    @property
    def kappa(self) -> float:
        """Cavity energy decay rate 1/t1_cavity."""
        return 1.0 / self.t1_cavity

    @property
    def pure_dephasing_rate_qubit(self) -> float:
        """1/T_phi = 1/T2e - 1/(2 T1) for the qubit; >= 0 for valid inputs."""
        return 1.0 / self.t2e_qubit - 1.0 / (2.0 * self.t1_qubit)


@dataclass(frozen=True)
class PulseSegment:
    """One piecewise-constant slice of an ECD drive schedule.

    cavity_drive_alpha is the classical cavity response alpha(t) held
    during the segment; qubit_flip_before marks the echo pi pulse played
    at the segment boundary.
    """

    duration: float
    cavity_drive_alpha: complex
    qubit_flip_before: bool = False

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("segment duration must be >= 0")


def _rotation_matrix(axis: str, angle: float) -> np.ndarray:
    pauli = _PAULI.get(f"pauli_{axis}")
    if pauli is None:
        raise ValueError(f"axis must be x, y or z, got {axis!r}")
    return (math.cos(angle / 2) * np.eye(2)
            - 1j * math.sin(angle / 2) * pauli)


def qubit_rotation(axis: str, angle: float, space: Space) -> Operator:
    """exp(-i angle sigma_axis / 2) on the qubit factor."""
    mat = _rotation_matrix(axis, angle)
    if isinstance(space, QubitSpace):
        return Operator(mat, space)
    if isinstance(space, SpaceSpec):
        return Operator(embed_qubit(mat, space), space)
    raise TypeError("qubit_rotation needs a qubit or composite space")


def _qubit_blocks(space: SpaceSpec, block_gg, block_ge, block_eg, block_ee):
    """Assemble a composite operator from cavity blocks in the qubit basis."""
    dim_c = space.cavity_dim
    zero = np.zeros((dim_c, dim_c), dtype=complex)
    blocks = [[block_gg if block_gg is not None else zero,
               block_ge if block_ge is not None else zero],
              [block_eg if block_eg is not None else zero,
               block_ee if block_ee is not None else zero]]
    if space.ordering == "qubit-first":
        return np.block(blocks)
    # cavity-first: interleave qubit indices
    out = np.zeros((space.dim, space.dim), dtype=complex)
    view = out.reshape(dim_c, 2, dim_c, 2)
    for qi in range(2):
        for qj in range(2):
            view[:, qi, :, qj] = blocks[qi][qj]
    return out


def conditional_displacement(beta: complex, space: SpaceSpec) -> Operator:
    """D(beta/2) on the g branch, D(-beta/2) on the e branch (no echo)."""
    half = _displacement(space.cavity_dim, beta / 2.0)
    half_m = _displacement(space.cavity_dim, -beta / 2.0)
    return Operator(_qubit_blocks(space, half, None, None, half_m), space)


def ecd_unitary(beta: complex, space: SpaceSpec) -> Operator:
    """Echo conditional displacement D(b/2)|g><e| + D(-b/2)|e><g|."""
    check_displacement_headroom(beta / 2.0, space.cavity_dim)
    half = _displacement(space.cavity_dim, beta / 2.0)
    half_m = _displacement(space.cavity_dim, -beta / 2.0)
    return Operator(_qubit_blocks(space, None, half, half_m, None), space)


def build_uv_gate(which: str, coeff: float, space: SpaceSpec) -> Operator:
    """The compression gates U(u) = exp(i u P sigma_x), V(v) = exp(i v X sigma_y).

    U is the rotation-ECD sandwich R_y(-pi/2) ECD(u) R_y(-pi/2) times one
    explicit qubit flip; V is R_x(-pi/2) ECD(i v) R_x(-pi/2) times the
    phase -i.  Either correction commutes with the sandwich, and the
    result matches the dense matrix exponential to machine precision.
    """
    u = float(coeff)
    if which == "U":
        ry = qubit_rotation("y", -math.pi / 2, space).matrix
        ecd = ecd_unitary(u, space).matrix
        flip = embed_qubit(_PAULI["pauli_x"], space)
        return Operator(flip @ ry @ ecd @ ry, space)
    if which == "V":
        rx = qubit_rotation("x", -math.pi / 2, space).matrix
        ecd = ecd_unitary(1j * u, space).matrix
        return Operator(-1j * (rx @ ecd @ rx), space)
    raise ValueError(f"which must be 'U' or 'V', got {which!r}")


def ecd_pulse_schedule(beta: complex, device: DeviceParams) -> list[PulseSegment]:
    """Constant-lever echoed drive schedule realizing ecd_unitary(beta).

    Four segments: dwell at +lever, echo pi pulse, dwell at -lever, and a
    zero-duration return marker that ends the drive.  During a dwell the
    displaced-frame dispersive interaction rotates each qubit branch about
    the lever point; the echo reverses the rotation sense so the two arcs
    compose into a pure conditional displacement.  The lever is sized from
    the exact arc chord, 2*lever*(1 - e^{i phi}) per branch with phi the
    dwell rotation angle, which makes the branch that starts in the ground
    state accumulate exactly D(-beta/2).  The opposite branch picks up the
    same displacement magnitude with its direction off by phi, the
    schedule's only coherent residual.  Total duration is
    |beta| / (chi * lever_alpha0), i.e. ecd_unit_duration * |beta| for the
    default lever.
    """
    beta = complex(beta)
    if beta == 0:
        return [PulseSegment(0.0, 0j, qubit_flip_before=True)]
    total = abs(beta) / (device.chi * device.lever_alpha0)
    phi = device.chi * total / 4.0  # rotation angle per dwell, per branch
    lever = -beta / (4.0 * (1.0 - cmath.exp(1j * phi)))
    return [
        PulseSegment(total / 2.0, lever, qubit_flip_before=False),
        PulseSegment(0.0, 0j, qubit_flip_before=True),
        PulseSegment(total / 2.0, -lever, qubit_flip_before=False),
        PulseSegment(0.0, 0j, qubit_flip_before=False),
    ]


def schedule_duration(schedule: list[PulseSegment]) -> float:
    return float(sum(seg.duration for seg in schedule))


def geometric_phase_scan(alphas, space: SpaceSpec) -> np.ndarray:
    """<sigma_x> after the forward-and-back calibration loop, per amplitude.

    The loop D(-i a) CD(-1) D(i a) CD(1) encloses a phase-space area that
    is opposite for the two qubit branches, so the equator qubit picks up
    a relative phase and <sigma_x> oscillates in the scan amplitude.  Both
    the conditional and unconditional pulse amplitudes are calibrated in
    pi-pulse units (a unit knob setting drives a displacement of pi), which
    makes the oscillation period 1/pi.
    """
    scale = math.pi
    dim_c = space.cavity_dim
    sx = embed_qubit(_PAULI["pauli_x"], space)
    cd_fwd = conditional_displacement(scale, space).matrix
    cd_back = conditional_displacement(-scale, space).matrix
    vac = np.zeros(dim_c, dtype=complex)
    vac[0] = 1.0
    equator = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    if space.ordering == "cavity-first":
        psi0 = np.kron(vac, equator)
    else:
        psi0 = np.kron(equator, vac)
    out = np.empty(len(alphas), dtype=float)
    for k, a in enumerate(alphas):
        d_out = embed_cavity(_displacement(dim_c, 1j * scale * a), space)
        d_back = embed_cavity(_displacement(dim_c, -1j * scale * a), space)
        psi = cd_fwd @ psi0
        psi = d_out @ psi
        psi = cd_back @ psi
        psi = d_back @ psi
        out[k] = float(np.real(psi.conj() @ (sx @ psi)))
    return out

"""Characteristic-function tomography and derived functionals.

The characteristic picture is primary: states are summarized as C(nu) =
<D(nu)> on rectangular grids, and everything else (Wigner maps, parity,
fidelities, blob contrast, sub-Planck marginals, density reconstruction)
is computed from those grids.  Normalization constants are anchored to the
vacuum run through the identical pipeline rather than quoted, so no
convention factor enters a reported number unverified.

Conventions: C_vac(nu) = exp(-|nu|^2/2); W(beta) is normalized to unit
integral with W_vac(0) = 2/pi; the Im[beta] marginal of W equals the 1D
transform of the Re-axis cut of C.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import curve_fit

from sqcat.dynamics import CharGrid, CoverageWarning
from sqcat.hilbert import CavitySpace, DensityMatrix, PureState

EDGE_WARN_LEVEL = 0.02
EDGE_ERROR_LEVEL = 0.05


@dataclass(frozen=True)
class WignerGrid:
    """Real Wigner samples W(beta) on a rectangular beta grid."""

    re_axis: np.ndarray
    im_axis: np.ndarray
    values: np.ndarray
    pad_factor: int = 1
    source_re_axis: np.ndarray | None = None
    source_im_axis: np.ndarray | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (np.size(self.im_axis), np.size(self.re_axis)):
            raise ValueError("values shape must be (len(im_axis), len(re_axis))")
        object.__setattr__(self, "values", vals)

    def origin_value(self) -> float:
        i = int(np.argmin(np.abs(self.im_axis)))
        j = int(np.argmin(np.abs(self.re_axis)))
        return float(self.values[i, j])

    def integral(self) -> float:
        dre = float(self.re_axis[1] - self.re_axis[0])
        dim_ = float(self.im_axis[1] - self.im_axis[0])
        return float(self.values.sum() * dre * dim_)


@dataclass
class BlobSeries:
    """Blob contrast against evolution time, with its exponential fit."""

    times: np.ndarray
    amplitudes: np.ndarray
    centers: np.ndarray
    fit: dict = field(default_factory=dict)


class BlobFit(NamedTuple):
    amplitude: float
    center: float
    fitted: bool


@dataclass(frozen=True)
class SubplanckMarginal:
    """Im[beta] marginal distribution with its vacuum reference."""

    axis: np.ndarray
    values: np.ndarray
    vacuum_values: np.ndarray

    def fringe_contrast(self) -> float:
        """(max - min)/(max + min) between adjacent fringe extrema.

        Requires at least two interior local maxima above 1e-3 of the peak
        (a single lobe has no fringes and scores 0); the minimum is taken
        between the outermost qualifying maxima.
        """
        v = self.values
        peak = float(v.max())
        if peak <= 0 or v.size < 3:
            return 0.0
        interior = np.arange(1, v.size - 1)
        is_max = (v[interior] >= v[interior - 1]) & (v[interior] >= v[interior + 1])
        max_idx = interior[is_max & (v[interior] > 1e-3 * peak)]
        if max_idx.size < 2:
            return 0.0
        span = v[max_idx.min():max_idx.max() + 1]
        hi = float(span.max())
        lo = float(max(span.min(), 0.0))
        return (hi - lo) / (hi + lo)


def default_axes(extent: float = 5.0, points: int = 201):
    ax = np.linspace(-extent, extent, points)
    return ax, ax.copy()


def _char_pure(amps: np.ndarray, nus: np.ndarray) -> np.ndarray:
    """C(nu) for a Fock-truncated pure state; the series terminates because
    a^k annihilates the support, so the value is exact for the stored state."""
    dim = amps.size
    ladder = np.sqrt(np.arange(1, dim))[:, None]
    flat = nus.ravel()
    coeff = np.conj(flat)[None, :]

    def lowered(term):
        return np.vstack([term[1:] * ladder, np.zeros_like(term[:1])])

    left = np.repeat(amps[:, None], flat.size, axis=1)
    term = left.copy()
    for k in range(1, dim):
        term = lowered(term) * (coeff / k)
        left = left + term
    right = np.repeat(amps[:, None], flat.size, axis=1)
    term = right.copy()
    for k in range(1, dim):
        term = lowered(term) * (-coeff / k)
        right = right + term
    vals = np.exp(-np.abs(flat) ** 2 / 2) * np.sum(np.conj(left) * right, axis=0)
    return vals.reshape(nus.shape)


def _char_density(rho: np.ndarray, nus: np.ndarray) -> np.ndarray:
    """C(nu) = tr(rho D(nu)) via the normally ordered moment double sum.

    Both sums terminate at the truncation because higher ladder moments
    vanish on the stored support, so the value is exact for the stored
    state and the cost does not grow with the rank of rho.
    """
    dim = rho.shape[0]
    flat = nus.ravel()
    low = np.diag(np.sqrt(np.arange(1.0, dim)), k=1)
    pw = np.empty((dim, dim, dim), dtype=complex)
    pw[0] = np.eye(dim)
    for k in range(1, dim):
        pw[k] = pw[k - 1] @ low
    # moments[m, k] = tr(rho adag^m a^k) = tr(a^k rho adag^m)
    moments = np.einsum("kab,bc,mac->mk", pw, rho, pw.conj(), optimize=True)
    left = np.empty((flat.size, dim), dtype=complex)
    right = np.empty((flat.size, dim), dtype=complex)
    left[:, 0] = 1.0
    right[:, 0] = 1.0
    neg = -np.conj(flat)
    for k in range(1, dim):
        left[:, k] = left[:, k - 1] * flat / k
        right[:, k] = right[:, k - 1] * neg / k
    vals = np.exp(-np.abs(flat) ** 2 / 2) * np.einsum(
        "nm,mk,nk->n", left, moments, right, optimize=True)
    return vals.reshape(nus.shape)


def char_function(state, re_axis, im_axis, source_label: str = "",
                  time_stamp: float = 0.0) -> CharGrid:
    """Characteristic function C(nu) = <D(nu)> sampled on a grid.

    Warns when |C| at the grid edge exceeds the coverage level, which is
    the operational sign that the grid clips the state.
    """
    re_axis = np.asarray(re_axis, dtype=float)
    im_axis = np.asarray(im_axis, dtype=float)
    rr, ii = np.meshgrid(re_axis, im_axis)
    nus = rr + 1j * ii
    if isinstance(state, PureState):
        vals = _char_pure(np.asarray(state.amplitudes), nus)
    elif isinstance(state, DensityMatrix):
        vals = _char_density(np.asarray(state.matrix), nus)
    else:
        raise TypeError("state must be a PureState or DensityMatrix")
    edge = max(np.abs(vals[0, :]).max(), np.abs(vals[-1, :]).max(),
               np.abs(vals[:, 0]).max(), np.abs(vals[:, -1]).max())
    if edge > EDGE_WARN_LEVEL:
        warnings.warn(f"|C| reaches {edge:.3f} at the grid edge; "
                      "grid may clip the state", CoverageWarning, stacklevel=2)
    return CharGrid(re_axis, im_axis, vals, source_label=source_label,
                    time_stamp=time_stamp)


def _edge_magnitude(grid: CharGrid) -> float:
    v = grid.values
    return float(max(np.abs(v[0, :]).max(), np.abs(v[-1, :]).max(),
                     np.abs(v[:, 0]).max(), np.abs(v[:, -1]).max()))


def wigner_from_char(grid: CharGrid, pad_factor: int = 4) -> WignerGrid:
    """W(beta) = (1/pi^2) Int C(nu) e^{beta nu* - beta* nu} d^2 nu by
    zero-padded FFT.

    With nu = x + iy and beta = p + iq the kernel is e^{2i(qx - py)}, so
    the x-transform yields the Im[beta] axis and the y-transform the
    Re[beta] axis, each scaled as q_k = pi k / (M dx).  Aliasing (grid too
    coarse for the state's phase oscillations) is detected by energy
    reaching the outer band of the conjugate domain.
    """
    if pad_factor < 1:
        raise ValueError("pad_factor must be >= 1")
    dx = grid.re_step
    dy = grid.im_step
    ny, nx = grid.values.shape
    mx = pad_factor * nx
    my = pad_factor * ny
    # x -> q: kernel e^{+2iqx}; inverse FFT supplies the +i sign
    f1 = np.fft.ifft(grid.values, n=mx, axis=1) * mx * dx
    q_axis = math.pi * np.fft.fftfreq(mx, d=dx)
    f1 = f1 * np.exp(2j * q_axis * grid.re_axis[0])[None, :]
    # y -> p: kernel e^{-2ipy}
    f2 = np.fft.fft(f1, n=my, axis=0) * dy
    p_axis = math.pi * np.fft.fftfreq(my, d=dy)
    f2 = f2 * np.exp(-2j * p_axis * grid.im_axis[0])[:, None]
    w = f2 / math.pi ** 2
    # rows currently index p (from the y-transform), columns index q
    w = np.fft.fftshift(w)
    p_axis = np.fft.fftshift(p_axis)
    q_axis = np.fft.fftshift(q_axis)
    resid = np.abs(w.imag).max()
    if resid > 1e-8:
        raise ValueError(f"Wigner imaginary residue {resid:.2e}; "
                         "input grid violates Hermitian symmetry")
    w = w.real
    # alias check: energy in the outer 10% band of the conjugate domain
    band_p = int(0.1 * my)
    band_q = int(0.1 * mx)
    outer = np.zeros_like(w, dtype=bool)
    outer[:band_p, :] = True
    outer[-band_p:, :] = True
    outer[:, :band_q] = True
    outer[:, -band_q:] = True
    peak = np.abs(w).max()
    if peak > 0 and np.abs(w[outer]).max() > 0.01 * peak:
        raise ValueError("characteristic grid too coarse for this state: "
                         "Wigner structure reaches the conjugate-domain edge")
    # orientation: values[row, col] = W(re_axis[col] + 1i*im_axis[row]);
    # rows index p after the y-transform, so transpose to put q on rows
    return WignerGrid(re_axis=p_axis, im_axis=q_axis, values=w.T,
                      pad_factor=pad_factor,
                      source_re_axis=grid.re_axis.copy(),
                      source_im_axis=grid.im_axis.copy())


def char_from_wigner(w: WignerGrid, nus: np.ndarray) -> np.ndarray:
    """Inverse map C(nu) = Int W(beta) e^{nu beta* - nu* beta} d^2 beta by
    direct quadrature at the requested points."""
    p = w.re_axis
    q = w.im_axis
    dp = float(p[1] - p[0])
    dq = float(q[1] - q[0])
    flat = np.asarray(nus, dtype=complex).ravel()
    x = flat.real[:, None]
    y = flat.imag[:, None]
    # exponent 2i(y p - x q) split over the two axes
    ker_p = np.exp(2j * y * p[None, :])
    ker_q = np.exp(-2j * x * q[None, :])
    vals = np.einsum("np,qp,nq->n", ker_p, w.values, ker_q) * dp * dq
    return vals.reshape(np.shape(nus))


def parity_from_char(grid: CharGrid) -> float:
    """Photon-number parity from the integral of C, vacuum-normalized.

    <P> = Int C d^2 nu / Int C_vac d^2 nu with the vacuum reference summed
    on the identical grid, so discretization bias cancels.
    """
    edge = _edge_magnitude(grid)
    if edge > EDGE_ERROR_LEVEL:
        raise ValueError(f"|C| reaches {edge:.3f} at the grid edge; "
                         "parity integral would be clipped")
    if edge > EDGE_WARN_LEVEL:
        warnings.warn(f"|C| reaches {edge:.3f} at the grid edge",
                      CoverageWarning, stacklevel=2)
    rr, ii = np.meshgrid(grid.re_axis, grid.im_axis)
    vac = np.exp(-(rr ** 2 + ii ** 2) / 2)
    return float(np.real(grid.values.sum()) / vac.sum())


def parity_from_wigner(w: WignerGrid) -> float:
    """Parity from the Wigner origin value, vacuum-calibrated.

    The vacuum reference runs through the identical transform when the
    source grid is recorded; otherwise the analytic origin value 2/pi is
    used.
    """
    if w.source_re_axis is not None and w.source_im_axis is not None:
        rr, ii = np.meshgrid(w.source_re_axis, w.source_im_axis)
        vac_char = CharGrid(w.source_re_axis, w.source_im_axis,
                            np.exp(-(rr ** 2 + ii ** 2) / 2))
        ref = wigner_from_char(vac_char, w.pad_factor).origin_value()
    else:
        ref = 2.0 / math.pi
    return w.origin_value() / ref


def overlap_fidelity_char(c_ideal: CharGrid, c_exp: CharGrid) -> float:
    """F = (1/pi) Int C_ideal C_exp* d^2 nu, the phase-space form of
    tr(rho sigma); exact fidelity when one side is pure."""
    if (c_ideal.re_axis.shape != c_exp.re_axis.shape
            or not np.allclose(c_ideal.re_axis, c_exp.re_axis, atol=1e-12)
            or not np.allclose(c_ideal.im_axis, c_exp.im_axis, atol=1e-12)):
        raise ValueError("grids must share identical axes")
    acc = np.sum(c_ideal.values * np.conj(c_exp.values))
    acc *= c_ideal.re_step * c_ideal.im_step / math.pi
    if abs(acc.imag) > 1e-3:
        warnings.warn(f"fidelity imaginary residue {acc.imag:.2e}",
                      stacklevel=2)
    return float(acc.real)


def blob_amplitude(xs, cut_values, center_guess: float,
                   window: float) -> BlobFit:
    """Gaussian-fit height and location of one blob in a 1D Re[C] cut.

    The fit is signed (odd-cat blobs are negative); the returned amplitude
    is the magnitude.  A converged fit whose center lies outside the window
    means the window holds no blob, only the tail of a feature elsewhere;
    that case reports amplitude 0.  Falls back to the extreme sample in the
    window, flagged via fitted=False, when the fit does not converge.
    """
    xs = np.asarray(xs, dtype=float)
    vals = np.asarray(cut_values, dtype=float)
    sel = np.abs(xs - center_guess) <= window
    if not np.any(sel):
        raise ValueError("window contains no samples")
    x = xs[sel]
    v = vals[sel]
    if not np.all(np.isfinite(v)):
        raise ValueError("cut contains non-finite values in the window")
    i0 = int(np.argmax(np.abs(v)))

    def bump(t, a, mu, sigma):
        return a * np.exp(-((t - mu) ** 2) / (2 * sigma ** 2))

    try:
        popt, _ = curve_fit(bump, x, v, p0=[v[i0], x[i0], 0.7], maxfev=2000)
    except (RuntimeError, ValueError):
        return BlobFit(abs(float(v[i0])), float(x[i0]), False)
    amp, mu = popt[0], popt[1]
    if not (x.min() - 1e-9 <= mu <= x.max() + 1e-9):
        return BlobFit(0.0, float(mu), True)
    return BlobFit(abs(float(amp)), float(mu), True)


def subplanck_marginal(grid: CharGrid, pad_factor: int = 4) -> SubplanckMarginal:
    """Im[beta] marginal from the 1D transform of the Im[nu]=0 cut.

    P(q) = (1/pi) Int C(x, 0) e^{2iqx} dx; the vacuum reference is the
    same transform applied to exp(-x^2/2) on the identical axis.
    """
    xs, cut = grid.cut("re")
    dx = grid.re_step
    m = pad_factor * xs.size

    def transform(values):
        f = np.fft.ifft(values, n=m) * m * dx
        q = math.pi * np.fft.fftfreq(m, d=dx)
        f = f * np.exp(2j * q * xs[0])
        return np.fft.fftshift(q), np.fft.fftshift(f) / math.pi

    q_axis, vals = transform(cut)
    _, vac = transform(np.exp(-xs ** 2 / 2))
    return SubplanckMarginal(q_axis, vals.real, vac.real)


@dataclass(frozen=True)
class ReconstructionResult:
    state: DensityMatrix
    converged: bool
    iterations: int
    objective: float


def _displacement_stack(nus: np.ndarray, dim: int) -> np.ndarray:
    """Exact truncated <m|D(nu)|n> for a batch of nu via the normal-ordered
    triangular factors; element-exact because a^k terminates on the space."""
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, dim)))))
    m_idx, n_idx = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    diff = m_idx - n_idx
    lower = diff >= 0
    weight = np.where(
        lower,
        np.exp(0.5 * (log_fact[m_idx] - log_fact[np.where(lower, n_idx, 0)])
               - log_fact[np.abs(diff)]),
        0.0)
    out = np.empty((nus.size, dim, dim), dtype=complex)
    powers = np.arange(dim)
    for i, nu in enumerate(nus):
        nu_pow = nu ** powers
        conj_pow = (-np.conj(nu)) ** powers
        up = weight * nu_pow[np.abs(diff)]
        down = (weight * conj_pow[np.abs(diff)]).T
        out[i] = math.exp(-abs(nu) ** 2 / 2) * (up @ down)
    return out


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto {w >= 0, sum w = 1}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    idx = k[u - css / k > 0][-1]
    theta = css[idx - 1] / idx
    return np.clip(v - theta, 0.0, None)


def reconstruct_density(samples: CharGrid, dim: int = 20,
                        max_iter: int = 400, tol: float = 1e-10,
                        max_points: int = 4096) -> ReconstructionResult:
    """Least-squares density-matrix reconstruction from C(nu) samples.

    Minimizes sum_i |tr(rho D(nu_i)) - C_i|^2 by projected gradient
    descent, alternating a gradient step with Euclidean projection onto
    the Hermitian PSD trace-1 set: eigenvalues are clipped at a common
    threshold chosen so the trace renormalizes to one (simplex
    projection; naive clip-then-divide has spurious fixed points and
    stalls short of the minimizer).  Deterministic; subsamples the grid
    evenly when it holds more than max_points entries.
    """
    rr, ii = np.meshgrid(samples.re_axis, samples.im_axis)
    nus = (rr + 1j * ii).ravel()
    vals = samples.values.ravel()
    if nus.size > max_points:
        stride = int(math.ceil(math.sqrt(nus.size / max_points)))
        keep_r = np.arange(0, samples.re_axis.size, stride)
        keep_i = np.arange(0, samples.im_axis.size, stride)
        sub = np.ix_(keep_i, keep_r)
        nus = (rr[sub] + 1j * ii[sub]).ravel()
        vals = samples.values[sub].ravel()
    if nus.size < dim * dim:
        raise ValueError(f"{nus.size} samples cannot determine a "
                         f"{dim}x{dim} density matrix")
    d_stack = _displacement_stack(nus, dim)
    d_dag = d_stack.conj().transpose(0, 2, 1)
    # step size 1/L with L = 2 lambda_max(A^dag A) for the linear sampling
    # map A: rho -> (tr(rho D_i))_i, measured by power iteration; the naive
    # bound 2N is ~20x too pessimistic and stalls convergence
    vec = np.eye(dim, dtype=complex) / math.sqrt(dim)
    lam = 1.0
    for _ in range(25):
        img = np.einsum("imn,nm->i", d_stack, vec)
        back = np.einsum("i,imn->mn", img, d_dag)
        back = 0.5 * (back + back.conj().T)
        lam = float(np.linalg.norm(back))
        if lam == 0:
            break
        vec = back / lam
    lr = 1.0 / (2.0 * max(lam, 1e-12))
    rho = np.eye(dim, dtype=complex) / dim
    prev_obj = np.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        pred = np.einsum("imn,nm->i", d_stack, rho)
        resid = pred - vals
        obj = float(np.vdot(resid, resid).real)
        grad = 2.0 * np.einsum("i,imn->mn", resid, d_dag)
        rho = rho - lr * grad
        rho = 0.5 * (rho + rho.conj().T)
        evals, evecs = np.linalg.eigh(rho)
        rho = (evecs * _project_simplex(evals)) @ evecs.conj().T
        if abs(prev_obj - obj) < tol:
            converged = True
            break
        prev_obj = obj
    pred = np.einsum("imn,nm->i", d_stack, rho)
    final_obj = float(np.vdot(pred - vals, pred - vals).real)
    return ReconstructionResult(DensityMatrix(rho, CavitySpace(dim)),
                                converged, iterations, final_obj)

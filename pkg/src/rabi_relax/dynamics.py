"""Time evolution and steady states.

Two solvers: the full Lindblad master equation (trace preserving) and the
no-jump Schrodinger equation under the non-Hermitian effective Hamiltonian
(norm decaying, optionally renormalized observables). Both use fixed-step
classical RK4. For a linear time-independent generator the RK4 step is the
degree-4 Taylor polynomial of h*G, so whenever the vectorized generator fits
in memory we precompute that one-step matrix and apply cached matrix powers
per sample interval; the stage-wise textbook form is kept for the full
two-chain basis where the superoperator would be too large. The two paths are
the same map up to rounding.

User-facing times are in units of T_c = pi/omega; integration is in 1/omega.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import CHAIN_TAGS, EVEN, FULL, ODD, BareState, FockCutoff, GROUND, _frozen, build_parity_chain
from .model import (
    DensityMatrix,
    ModelParams,
    _dissipator_action,
    _lowering_for,
    _pair_decay_diag,
    bare_vector,
    build_effective_hamiltonian,
    build_hamiltonian,
    liouvillian_matrix,
)

# largest vectorized-generator dimension (dim^2) handled via the propagator path
_PROP_SUPERDIM_MAX = 1600

_SUPPORT_TOL = 1e-12


class SolverError(RuntimeError):
    """Integration aborted (trace drift, negativity, or step instability)."""


class TruncationError(SolverError):
    """State support too close to the Fock cutoff for trustworthy evolution."""


@dataclass(frozen=True)
class StateVector:
    """Pure state on one chain (or the full basis) with norm bookkeeping."""

    basis_tag: object
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex)
        if v.ndim != 1:
            raise ValueError("amplitudes must be a vector")
        if self.normalized and abs(np.vdot(v, v).real - 1.0) > 1e-10:
            raise ValueError("state flagged normalized but norm differs from 1")
        object.__setattr__(self, "amplitudes", _frozen(v))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def from_bare(cls, cutoff: FockCutoff, state: BareState, basis=None) -> "StateVector":
        return cls(basis if basis is not None else _parity_of(state), bare_vector(cutoff, state, basis))


def _parity_of(state: BareState) -> int:
    from .hilbert import parity_of

    return parity_of(state)


@dataclass(frozen=True)
class Trajectory:
    """Sampled observables along one evolution; times in units of T_c = pi/omega."""

    times: np.ndarray
    mean_photon: np.ndarray
    qubit_excitation: np.ndarray
    trace: np.ndarray
    purity: np.ndarray
    states: tuple | None = None  # per-sample raw matrices/vectors when requested


@dataclass(frozen=True)
class SteadyReport:
    """Steady-state result; non-convergence is a first-class outcome.

    For a non-converged long-time run the observables are the time averages
    over the final window and window_variance their spread; residual is the
    Frobenius norm of the Liouvillian right-hand side at rho_ss.
    """

    converged: bool
    rho_ss: DensityMatrix
    mean_photon: float
    qubit_excitation: float
    residual: float
    window_variance: float
    note: str = ""


def canonical_initial_state(parity: int) -> BareState:
    """|2,g> for the even sector, |3,g> for the odd one."""
    if parity == EVEN:
        return BareState(2, GROUND)
    if parity == ODD:
        return BareState(3, GROUND)
    raise ValueError(f"parity must be +1 or -1, got {parity!r}")


def _observable_diags(basis_tag, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """(photon number, excited-qubit indicator) diagonals for a basis."""
    if basis_tag in CHAIN_TAGS:
        cut = FockCutoff(dim - 1)
        return np.arange(dim, dtype=float), build_parity_chain(basis_tag, cut).excitation_bits().astype(float)
    if basis_tag == FULL:
        ns = np.repeat(np.arange(dim // 2, dtype=float), 2)
        bits = np.tile([0.0, 1.0], dim // 2)
        return ns, bits
    raise ValueError(f"observables need a chain or full basis, got {basis_tag!r}")


def observables(state, renormalize: bool = True) -> tuple[float, float, float, float]:
    """(mean_photon, qubit_excitation, trace_or_norm2, purity) of a state.

    Density matrices report raw traces (so drift is visible); state vectors
    report expectation values divided by the norm when renormalize is true,
    with the squared norm in the trace slot either way.
    """
    if isinstance(state, DensityMatrix):
        ns, bits = _observable_diags(state.basis_tag, state.dim)
        diag = np.diagonal(state.entries).real
        purity = float(np.vdot(state.entries, state.entries).real)
        return float(diag @ ns), float(diag @ bits), float(diag.sum()), purity
    if isinstance(state, StateVector):
        ns, bits = _observable_diags(state.basis_tag, state.dim)
        w = np.abs(state.amplitudes) ** 2
        norm2 = float(w.sum())
        scale = norm2 if (renormalize and norm2 > 0) else 1.0
        return float(w @ ns / scale), float(w @ bits / scale), norm2, 1.0
    raise TypeError(f"expected DensityMatrix or StateVector, got {type(state).__name__}")


def _omega_max(params: ModelParams) -> float:
    """Largest doublet frequency |Omega_n| representable in the truncated chain."""
    n_top = max(params.cutoff.n_max, 1)
    ns = np.arange(n_top, dtype=float)
    out = 0.0
    for det, g in ((params.omega - params.delta, params.g1), (params.omega + params.delta, params.g2)):
        a = det - 2j * params.kappa * ns
        b = 2.0 * g * np.sqrt(ns + 1.0)
        out = max(out, float(np.abs(np.sqrt(a * a + b * b)).max()))
    return out


def _step_bound(params: ModelParams) -> float:
    h = 0.01 / params.omega
    om = _omega_max(params)
    if om > 0:
        h = min(h, 0.1 / om)
    return h


def _time_grid(t_grid, omega: float) -> tuple[np.ndarray, np.ndarray]:
    """(times in T_c as given, physical interval lengths from t=0)."""
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if t.size == 0:
        raise ValueError("time grid is empty")
    if t[0] < 0 or np.any(np.diff(t) < 0):
        raise ValueError("time grid must be non-negative and non-decreasing")
    t_phys = t * (math.pi / omega)
    dts = np.diff(np.concatenate(([0.0], t_phys)))
    return t, dts


def _rk4_step_matrix(gen: np.ndarray, h: float) -> np.ndarray:
    """One fixed-step RK4 update matrix for x' = gen x (degree-4 Taylor of h*gen)."""
    hg = h * gen
    out = np.eye(gen.shape[0], dtype=complex) + hg
    term = hg
    for k in (2.0, 3.0, 4.0):
        term = term @ hg / k
        out = out + term
    return out


class _Rk4Propagator:
    """Caches interval propagators P(dt) = rk4_step(dt/m)^m, keyed by dt.

    Interval lengths are quantized at 1e-12 before keying so the last-ulp
    jitter of linspace grids reuses one matrix; the time error introduced is
    far below every stated tolerance.
    """

    def __init__(self, gen: np.ndarray, h_bound: float):
        self._gen = np.ascontiguousarray(gen)
        self._h = float(h_bound)
        self._cache: dict[float, np.ndarray] = {}

    def matrix_for(self, dt: float) -> np.ndarray:
        key = round(float(dt), 12)
        mat = self._cache.get(key)
        if mat is None:
            m = max(1, math.ceil(key / self._h - 1e-12))
            mat = np.linalg.matrix_power(_rk4_step_matrix(self._gen, key / m), m)
            self._cache[key] = mat
        return mat


def _master_rhs(params: ModelParams, basis):
    hmat = build_hamiltonian(params, basis).entries
    a2 = _lowering_for(params, basis)
    kdiag = _pair_decay_diag(params.cutoff, basis)
    kappa = params.kappa

    def rhs(r):
        out = -1j * (hmat @ r - r @ hmat)
        if kappa:
            out += _dissipator_action(r, kappa, a2, kdiag)
        return out

    return rhs


def _stage_advance(r: np.ndarray, rhs, dt: float, h_bound: float) -> np.ndarray:
    m = max(1, math.ceil(dt / h_bound - 1e-12))
    h = dt / m
    for _ in range(m):
        k1 = rhs(r)
        k2 = rhs(r + 0.5 * h * k1)
        k3 = rhs(r + 0.5 * h * k2)
        k4 = rhs(r + h * k3)
        r = r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return r


def _expected_dim(params: ModelParams, basis) -> int:
    if basis in CHAIN_TAGS:
        return params.cutoff.dim
    if basis == FULL:
        return params.cutoff.full_dim
    raise ValueError(f"evolution needs a chain or full basis, got {basis!r}")


def _check_support(populations: np.ndarray, levels: np.ndarray, params: ModelParams):
    occupied = levels[populations > _SUPPORT_TOL]
    if occupied.size == 0:
        return
    top = int(occupied.max())
    if top > params.cutoff.n_max - 2:
        raise TruncationError(
            f"initial support reaches n={top}; need n_max >= {top + 2} for two levels of "
            f"headroom, got n_max={params.cutoff.n_max}")


def _guard_sample(rho: np.ndarray, t_tc: float):
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-6:
        raise SolverError(
            f"trace drifted to {tr:.9f} at t={t_tc:g} T_c; truncation too tight or step too "
            "large (raise n_max or lower the step bound)")
    w_min = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2.0).min())
    if w_min < -1e-6:
        raise SolverError(
            f"density matrix eigenvalue {w_min:.3e} at t={t_tc:g} T_c; truncation too tight "
            "or step too large (raise n_max or lower the step bound)")


def evolve_master(rho0: DensityMatrix, params: ModelParams, t_grid,
                  store_states: bool = False) -> tuple[Trajectory, DensityMatrix]:
    """Integrate the master equation, sampling observables at t_grid (T_c units).

    Returns the trajectory and the final density matrix. Aborts with a
    diagnostic if the trace drifts or negativity grows beyond 1e-6.
    """
    basis = rho0.basis_tag
    dim = _expected_dim(params, basis)
    if rho0.dim != dim:
        raise ValueError(f"rho0 dim {rho0.dim} does not match cutoff dim {dim}")
    rho0.validate()
    ns, bits = _observable_diags(basis, dim)
    _check_support(np.diagonal(rho0.entries).real, ns, params)

    times, dts = _time_grid(t_grid, params.omega)
    h_bound = _step_bound(params)

    use_prop = basis in CHAIN_TAGS and dim * dim <= _PROP_SUPERDIM_MAX
    if use_prop:
        prop = _Rk4Propagator(liouvillian_matrix(params, basis), h_bound)
        v = rho0.entries.reshape(-1).astype(complex)
    else:
        rhs = _master_rhs(params, basis)
        r = rho0.entries.astype(complex)

    n_samp = times.size
    photon = np.empty(n_samp)
    qubit = np.empty(n_samp)
    trace = np.empty(n_samp)
    purity = np.empty(n_samp)
    kept = [] if store_states else None

    for i in range(n_samp):
        if dts[i] > 1e-15:
            if use_prop:
                v = prop.matrix_for(dts[i]) @ v
            else:
                r = _stage_advance(r, rhs, dts[i], h_bound)
        rho = v.reshape(dim, dim) if use_prop else r
        _guard_sample(rho, times[i])
        diag = np.diagonal(rho).real
        photon[i] = diag @ ns
        qubit[i] = diag @ bits
        trace[i] = diag.sum()
        purity[i] = np.vdot(rho, rho).real
        if store_states:
            kept.append(rho.copy())

    rho_final = (v.reshape(dim, dim) if use_prop else r).copy()
    traj = Trajectory(times, photon, qubit, trace, purity,
                      tuple(kept) if store_states else None)
    return traj, DensityMatrix(basis, rho_final)


def evolve_effective(psi0: StateVector, params: ModelParams, t_grid,
                     renormalize: bool = True) -> Trajectory:
    """Integrate i dpsi/dt = H_eff psi on one chain, sampling at t_grid (T_c).

    The trace slot carries the squared norm (monotonically non-increasing for
    kappa > 0); mean photon and qubit excitation are divided by it when
    renormalize is true. Purity is identically 1 for a pure state.
    """
    basis = psi0.basis_tag
    if basis not in CHAIN_TAGS:
        raise ValueError("effective evolution expects a single-chain state")
    dim = _expected_dim(params, basis)
    if psi0.dim != dim:
        raise ValueError(f"psi0 dim {psi0.dim} does not match cutoff dim {dim}")
    ns, bits = _observable_diags(basis, dim)
    _check_support(np.abs(psi0.amplitudes) ** 2, ns, params)

    times, dts = _time_grid(t_grid, params.omega)
    gen = -1j * build_effective_hamiltonian(params, basis).entries
    prop = _Rk4Propagator(gen, _step_bound(params))

    v = psi0.amplitudes.astype(complex)
    n_samp = times.size
    photon = np.empty(n_samp)
    qubit = np.empty(n_samp)
    norm2 = np.empty(n_samp)
    prev = float(np.vdot(v, v).real)

    for i in range(n_samp):
        if dts[i] > 1e-15:
            v = prop.matrix_for(dts[i]) @ v
        w = np.abs(v) ** 2
        n2 = float(w.sum())
        if n2 > prev * (1.0 + 1e-9) + 1e-12:
            raise SolverError(
                f"norm grew from {prev:.12g} to {n2:.12g} at t={times[i]:g} T_c; "
                "step too large for this coupling")
        prev = n2
        scale = n2 if (renormalize and n2 > 0) else 1.0
        photon[i] = w @ ns / scale
        qubit[i] = w @ bits / scale
        norm2[i] = n2

    return Trajectory(times, photon, qubit, norm2, np.ones(n_samp))


def transient_snapshot(g1_values, lam: float, params: ModelParams, parity: int,
                       t_snap: float) -> np.ndarray:
    """Master-equation observables at one time, swept over g1 with g2 = lam*g1.

    Starts each point from the canonical parity-definite initial state and
    returns rows (g1, mean_photon, qubit_excitation); t_snap in T_c units.
    """
    init = canonical_initial_state(parity)
    rows = np.empty((len(g1_values), 3))
    for i, g1 in enumerate(np.asarray(g1_values, dtype=float)):
        point = params.with_ratio(float(g1), lam)
        rho0 = DensityMatrix.from_bare(point.cutoff, init, parity)
        traj, _ = evolve_master(rho0, point, [t_snap])
        rows[i] = (g1, traj.mean_photon[-1], traj.qubit_excitation[-1])
    return rows


def _initial_for(params: ModelParams, parity: int, initial: BareState | None) -> DensityMatrix:
    state = initial if initial is not None else canonical_initial_state(parity)
    if _parity_of(state) != parity:
        raise ValueError(f"initial state {state} is not in the parity {parity:+d} sector")
    return DensityMatrix.from_bare(params.cutoff, state, parity)


def _steady_long_time(params: ModelParams, parity: int, initial, obs_tol: float,
                      residual_tol: float, window_tc: float, cap_tc: float,
                      sample_dt_tc: float) -> SteadyReport:
    dim = params.cutoff.dim
    rho0 = _initial_for(params, parity, initial)
    ns, bits = _observable_diags(parity, dim)
    _check_support(np.diagonal(rho0.entries).real, ns, params)

    lmat = liouvillian_matrix(params, parity)
    dt = sample_dt_tc * math.pi / params.omega
    prop = _Rk4Propagator(lmat, _step_bound(params))
    step = prop.matrix_for(dt)

    per_window = max(2, int(round(window_tc / sample_dt_tc)))
    n_windows = max(1, int(math.ceil(cap_tc / window_tc)))
    diag_idx = np.arange(dim) * (dim + 1)

    v = rho0.entries.reshape(-1).astype(complex)
    t_tc = 0.0
    ph = np.empty(per_window)
    ex = np.empty(per_window)
    for _ in range(n_windows):
        v_sum = np.zeros_like(v)
        for s in range(per_window):
            v = step @ v
            diag = v[diag_idx].real
            ph[s] = diag @ ns
            ex[s] = diag @ bits
            v_sum += v
        t_tc += window_tc
        _guard_sample(v.reshape(dim, dim), t_tc)
        spread = max(ph.max() - ph.min(), ex.max() - ex.min())
        if spread < obs_tol:
            residual = float(np.linalg.norm(lmat @ v))
            if residual <= residual_tol:
                rho = DensityMatrix(parity, v.reshape(dim, dim))
                return SteadyReport(True, rho, float(ph[-1]), float(ex[-1]), residual,
                                    float(max(ph.var(), ex.var())))
    v_avg = v_sum / per_window
    rho = DensityMatrix(parity, v_avg.reshape(dim, dim))
    residual = float(np.linalg.norm(lmat @ v_avg))
    return SteadyReport(False, rho, float(ph.mean()), float(ex.mean()), residual,
                        float(max(ph.var(), ex.var())),
                        note=f"no convergence by t={cap_tc:g} T_c (spread {spread:.3e})")


def _steady_null_space(params: ModelParams, parity: int, residual_tol: float,
                       kernel_rtol: float = 1e-10) -> SteadyReport:
    dim = params.cutoff.dim
    lmat = liouvillian_matrix(params, parity)
    _, svals, vh = np.linalg.svd(lmat)
    tol = svals[0] * kernel_rtol if svals[0] > 0 else kernel_rtol
    kernel = vh[svals < tol].conj()
    k_dim = kernel.shape[0]
    if k_dim == 0:
        raise SolverError("Liouvillian kernel not resolved; singular values all above tolerance")

    diag_idx = np.arange(dim) * (dim + 1)
    traces = kernel[:, diag_idx].sum(axis=1)
    tnorm = float(np.linalg.norm(traces))
    if tnorm < 1e-12:
        rho = DensityMatrix(parity, np.eye(dim, dtype=complex) / dim)
        return SteadyReport(False, rho, float("nan"), float("nan"), float("nan"), 0.0,
                            note=f"kernel (dim {k_dim}) contains no trace-class state")
    v = (traces.conj() / tnorm) @ kernel
    rho = v.reshape(dim, dim)
    rho = (rho + rho.conj().T) / 2.0
    rho = rho / np.trace(rho).real
    ns, bits = _observable_diags(parity, dim)
    diag = np.diagonal(rho).real
    residual = float(np.linalg.norm(lmat @ rho.reshape(-1)))
    negativity = float(np.linalg.eigvalsh(rho).min())

    note = ""
    converged = True
    if k_dim > 1:
        converged = False
        note = f"degenerate steady manifold: kernel dimension {k_dim}"
    elif negativity < -1e-8:
        converged = False
        note = f"kernel state not positive (min eigenvalue {negativity:.3e})"
    elif residual > residual_tol:
        converged = False
        note = f"kernel residual {residual:.3e} above tolerance"
    return SteadyReport(converged, DensityMatrix(parity, rho), float(diag @ ns),
                        float(diag @ bits), residual, 0.0, note=note)


def steady_state(params: ModelParams, parity: int, method: str = "long_time",
                 initial: BareState | None = None, obs_tol: float = 1e-6,
                 residual_tol: float = 1e-6, window_tc: float = 20.0,
                 cap_tc: float = 1000.0, sample_dt_tc: float = 0.25) -> SteadyReport:
    """Steady state of one parity sector.

    long_time evolves the canonical initial state until both observables vary
    by less than obs_tol over a window_tc window (and the Liouvillian residual
    is below residual_tol), capped at cap_tc; hitting the cap yields
    converged=False with window-averaged observables. null_space solves for
    the kernel of the vectorized Liouvillian directly and flags degeneracy.
    """
    if method == "long_time":
        return _steady_long_time(params, parity, initial, obs_tol, residual_tol,
                                 window_tc, cap_tc, sample_dt_tc)
    if method == "null_space":
        return _steady_null_space(params, parity, residual_tol)
    raise ValueError(f"method must be 'long_time' or 'null_space', got {method!r}")


def steady_map(points, params: ModelParams, parity: int, method: str = "long_time",
               **kwargs) -> list[tuple[float, float, SteadyReport]]:
    """steady_state over explicit (g1, g2) points; rows in input order."""
    out = []
    for g1, g2 in points:
        point = params.with_coupling(g1=float(g1), g2=float(g2))
        out.append((float(g1), float(g2), steady_state(point, parity, method, **kwargs)))
    return out


def truncation_check(params: ModelParams, parity: int, t_snap: float,
                     initial: BareState | None = None) -> float:
    """Largest observable change at t_snap when the Fock cutoff is doubled."""
    state = initial if initial is not None else canonical_initial_state(parity)
    doubled = ModelParams(delta=params.delta, g1=params.g1, g2=params.g2,
                          kappa=params.kappa, omega=params.omega,
                          cutoff=FockCutoff(2 * params.cutoff.n_max))
    base_traj, _ = evolve_master(DensityMatrix.from_bare(params.cutoff, state, parity),
                                 params, [t_snap])
    wide_traj, _ = evolve_master(DensityMatrix.from_bare(doubled.cutoff, state, parity),
                                 doubled, [t_snap])
    return float(max(abs(base_traj.mean_photon[-1] - wide_traj.mean_photon[-1]),
                     abs(base_traj.qubit_excitation[-1] - wide_traj.qubit_excitation[-1])))

"""Closed forms for the three solvable limits of the model.

With g2 = 0 each parity chain splits into 2x2 blocks spanned by
{|n,e>, |n+1,g>} (rotating doublets); with g1 = 0 the blocks are
{|n+1,e>, |n,g>} (counter-rotating doublets). Including two-photon
relaxation, the non-Hermitian block for the doublet n is

    (n + 1/2) omega - i kappa n^2  +-  Omega_n / 2,
    Omega_n = sqrt(A_n^2 + B_n^2),

with A_n = (omega - delta) - 2i kappa n, B_n = 2 g1 sqrt(n+1) in the rotating
case and A_n = (omega + delta) - 2i kappa n, B_n = 2 g2 sqrt(n+1) in the
counter-rotating one. Everything here is derived from those blocks and is used
as the independent oracle for the numerical spectra and dynamics modules.

Times are absolute (units of 1/omega); per-T_c conventions live in `dynamics`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import sqrt

import numpy as np

from .model import ModelParams

JC = "JC"
AJC = "AJC"


@dataclass(frozen=True)
class DoubletSolution:
    """One 2x2 block: complex eigenvalues plus dressed-state coefficients.

    The + branch carries the square-root term with non-negative real part
    (principal branch); at an exceptional point both branches coincide. The
    dressed eigenvectors are |+> = mix_cos |upper> + mix_sin |lower> and
    |-> = -mix_sin |upper> + mix_cos |lower> where (upper, lower) is
    (|n,e>, |n+1,g>) for the rotating flavor and (|n+1,e>, |n,g>) for the
    counter-rotating one. mix_cos^2 + mix_sin^2 = 1 (complex identity) except
    exactly at an EP, where the block is defective and the returned pair is
    Euclidean-normalized instead.
    """

    n: int
    flavor: str
    detuning: float
    A: complex
    B: float
    Omega: complex
    E_plus: complex
    E_minus: complex
    mix_cos: complex
    mix_sin: complex


def decoupled_eigenvalue(n: int, sign: int, params: ModelParams) -> complex:
    """Eigenvalue n*omega +- delta/2 - i kappa n(n-1) of the uncoupled model."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    return n * params.omega + sign * params.delta / 2.0 - 1j * params.kappa * n * (n - 1)


def _doublet(n: int, flavor: str, params: ModelParams) -> DoubletSolution:
    if n < 0:
        raise ValueError("doublet index must be non-negative")
    if flavor == JC:
        detuning = params.omega - params.delta
        coupling = params.g1
        block_sign = -1.0  # upper bare state sits at center - A/2
    elif flavor == AJC:
        detuning = params.omega + params.delta
        coupling = params.g2
        block_sign = +1.0
    else:
        raise ValueError(f"flavor must be JC or AJC, got {flavor!r}")

    a_term = detuning - 2j * params.kappa * n
    b_term = 2.0 * coupling * sqrt(n + 1.0)
    omega_c = np.sqrt(complex(a_term * a_term + b_term * b_term))
    center = (n + 0.5) * params.omega - 1j * params.kappa * n * n

    sa = block_sign * a_term
    if omega_c == 0 and b_term == 0.0:
        mix_cos, mix_sin = 1.0, 0.0  # block is a multiple of the identity
    elif omega_c == 0:
        # defective block: single eigenvector, Euclidean-normalized by convention
        mix_cos = 1.0 / sqrt(2.0)
        mix_sin = (-sa / b_term) * mix_cos
    elif b_term == 0.0:
        mix_cos = np.sqrt((omega_c + sa) / (2.0 * omega_c))
        mix_sin = np.sqrt((omega_c - sa) / (2.0 * omega_c))
    else:
        # derive sin from the eigenvector equation so cos^2 + sin^2 = 1 exactly
        mix_cos = np.sqrt((omega_c + sa) / (2.0 * omega_c))
        mix_sin = (omega_c - sa) / b_term * mix_cos

    return DoubletSolution(
        n=n, flavor=flavor, detuning=detuning, A=a_term, B=b_term, Omega=omega_c,
        E_plus=center + omega_c / 2.0, E_minus=center - omega_c / 2.0,
        mix_cos=complex(mix_cos), mix_sin=complex(mix_sin),
    )


def jc_doublet(n: int, params: ModelParams) -> DoubletSolution:
    """Rotating doublet {|n,e>, |n+1,g>}; meaningful when g2 is absent."""
    return _doublet(n, JC, params)


def ajc_doublet(n: int, params: ModelParams) -> DoubletSolution:
    """Counter-rotating doublet {|n+1,e>, |n,g>}; meaningful when g1 is absent."""
    return _doublet(n, AJC, params)


def doublet_block(sol: DoubletSolution, params: ModelParams) -> np.ndarray:
    """Explicit 2x2 effective-Hamiltonian block the solution diagonalizes."""
    center = (sol.n + 0.5) * params.omega - 1j * params.kappa * sol.n * sol.n
    sign = -1.0 if sol.flavor == JC else +1.0
    return np.array([
        [center + sign * sol.A / 2.0, sol.B / 2.0],
        [sol.B / 2.0, center - sign * sol.A / 2.0],
    ])


def _transfer_population(a_term: complex, b_term: float, n: int, kappa: float, t):
    t_arr = np.asarray(t, dtype=float)
    omega_c = np.sqrt(complex(a_term * a_term + b_term * b_term))
    # (B/Omega) sin(Omega t/2) written through sinc so Omega -> 0 is regular
    amp = b_term * (t_arr / 2.0) * np.sinc(omega_c * t_arr / (2.0 * np.pi))
    prob = np.abs(amp) ** 2 * np.exp(-2.0 * kappa * n * n * t_arr)
    return float(prob) if np.isscalar(t) else prob


def jc_population(n: int, t, params: ModelParams):
    """Probability of |n+1,g> at time t starting from |n,e> (no-jump evolution).

    Modulus squared of -i (B/Omega) sin(Omega t / 2) e^{-kappa n^2 t} with the
    principal-branch complex Omega; reduces to the standard Rabi formula
    (B^2/Omega^2) sin^2(Omega t / 2) at kappa = 0.
    """
    a_term = (params.omega - params.delta) - 2j * params.kappa * n
    return _transfer_population(a_term, 2.0 * params.g1 * sqrt(n + 1.0), n, params.kappa, t)


def ajc_population(n: int, t, params: ModelParams):
    """Probability of |n,g> at time t starting from |n+1,e> (no-jump evolution)."""
    a_term = (params.omega + params.delta) - 2j * params.kappa * n
    return _transfer_population(a_term, 2.0 * params.g2 * sqrt(n + 1.0), n, params.kappa, t)


def even_peak_position(m: int, params: ModelParams) -> float:
    """g1/omega of the m-th even-sector steady-state peak: sqrt((2m-1) + delta/omega)."""
    if m < 1:
        raise ValueError("peak order m must be >= 1")
    return sqrt((2 * m - 1) + params.delta / params.omega)


def odd_peak_position(m: int, params: ModelParams) -> float:
    """g2/omega of the m-th odd-sector extremum: sqrt((2m-1) - delta/omega)."""
    if m < 1:
        raise ValueError("peak order m must be >= 1")
    radicand = (2 * m - 1) - params.delta / params.omega
    if radicand < 0:
        raise ValueError(f"no odd-sector crossing of order {m}: radicand {radicand:.3f} < 0")
    return sqrt(radicand)


def ep_position(n: int, params: ModelParams) -> float:
    """g1/omega where the resonant doublet-n splitting closes: kappa n / sqrt(n+1)."""
    if n < 0:
        raise ValueError("doublet index must be non-negative")
    kap = params.kappa / params.omega
    return sqrt(kap * kap * n * n / (n + 1.0))


def sweep_doublet(flavor: str, n: int, params: ModelParams, axis: str, values) -> np.ndarray:
    """Doublet eigenvalues along a coupling sweep, branch-continuous.

    Returns shape (2, len(values)): row 0 the + branch, row 1 the - branch.
    The square root is taken on the principal branch and its sign is flipped
    whenever the projection on the previous sweep point goes negative, which
    keeps each branch continuous through exceptional points.
    """
    if axis not in ("g1", "g2"):
        raise ValueError("axis must be 'g1' or 'g2'")
    values = np.asarray(values, dtype=float)
    out = np.empty((2, values.size), dtype=complex)
    prev_root = None
    for i, v in enumerate(values):
        sol = _doublet(n, flavor, replace(params, **{axis: float(v)}))
        root = sol.E_plus - sol.E_minus  # = Omega
        if prev_root is not None and (root.conjugate() * prev_root).real < 0:
            root = -root
        center = (sol.E_plus + sol.E_minus) / 2.0
        out[0, i] = center + root / 2.0
        out[1, i] = center - root / 2.0
        prev_root = root
    return out

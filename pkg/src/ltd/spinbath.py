"""Collective-frequency engine for a qubit dephased by a finite spin bath.

The coupling pairs an object eigenvalue a with the collective bath
frequency omega = sum_k g_k alpha_k, alpha_k = +-1, so every branch
operator entry depends on a bath configuration only through its omega.
All traces, products, norms, and spectra therefore compress onto the
distinct-frequency support: matrices indexed by (omega, omega') with the
configuration weights folded in.  The arithmetic coupling preset keeps
that support linear in the qubit count, which is what makes the larger
baths exact; a seeded configuration-sampling path covers baths whose
support would not fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .errors import ParameterError, ShapeError, SizeError
from .localtime import GaussianTimeLaw
from .bipartite import (
    DEGENERACY_TOL,
    EPSILON_LEMMA,
    MIN_T0_SAMPLES,
    PASS_FRACTION,
    SAMPLING_PERIODS,
    BasisCandidate,
    UniquenessReport,
    detect_degenerate_groups,
    pinch_trace,
    rotation_coefficients,
)

EXACT_CROSSOVER = 14      # auto mode enumerates exactly up to this many qubits
MAX_EXACT_QUBITS = 24     # hard ceiling for requesting the exact path
MAX_SUPPORT = 4096        # largest frequency support kept as dense kernels
SUPPORT_DECIMALS = 12


@dataclass(frozen=True)
class SpinBathSpec:
    """Bath layout: couplings, object spectrum, per-qubit amplitudes.

    amplitudes holds one (up, down) pair per qubit; coarse_map optionally
    sends each object eigenvalue to a coarse-grained replacement.  mode
    picks the evaluation path: "auto" enumerates exactly through
    EXACT_CROSSOVER qubits and samples beyond, "exact" and "mc" force a
    path.
    """

    n: int
    g: np.ndarray
    a_spectrum: np.ndarray
    amplitudes: np.ndarray
    coarse_map: Mapping | None = None
    mode: str = "auto"
    mc_samples: int = 100_000

    def __post_init__(self):
        if self.n < 2:
            raise ParameterError(f"need at least 2 bath qubits, got {self.n}")
        g = np.asarray(self.g, dtype=np.float64).ravel()
        if g.size != self.n or not np.all(np.isfinite(g)):
            raise ShapeError("couplings must be finite, one per qubit")
        a = np.asarray(self.a_spectrum, dtype=np.float64).ravel()
        if a.size < 2 or not np.all(np.isfinite(a)):
            raise ParameterError("object spectrum needs at least 2 finite values")
        if np.unique(a).size != a.size:
            raise ParameterError("object spectrum values must be distinct")
        amp = np.asarray(self.amplitudes, dtype=np.complex128)
        if amp.shape != (self.n, 2):
            raise ShapeError(f"amplitudes must be ({self.n}, 2), got {amp.shape}")
        norms = np.sum(np.abs(amp) ** 2, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-12:
            raise ParameterError("each qubit's amplitude pair must be normalized")
        if self.mode not in ("auto", "exact", "mc"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.mc_samples < 1:
            raise ParameterError("mc_samples must be positive")
        if self.coarse_map is not None:
            missing = [v for v in a if float(v) not in self.coarse_map]
            if missing:
                raise ParameterError(
                    f"coarse_map must cover the full spectrum, missing {missing}"
                )
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "a_spectrum", a)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def preset(cls, n: int, a_spectrum=(1.0, -1.0), **kw) -> "SpinBathSpec":
        """Arithmetic couplings g_k = k/n with balanced qubits."""
        g = np.arange(1, n + 1, dtype=np.float64) / n
        amp = np.full((n, 2), 1.0 / math.sqrt(2.0), dtype=np.complex128)
        return cls(n, g, np.asarray(a_spectrum, dtype=np.float64), amp, **kw)

    @classmethod
    def random_couplings(
        cls, n: int, seed: int, a_spectrum=(1.0, -1.0), **kw
    ) -> "SpinBathSpec":
        """Seeded uniform-(0,1) couplings with balanced qubits."""
        g = np.random.default_rng(seed).uniform(0.0, 1.0, size=n)
        amp = np.full((n, 2), 1.0 / math.sqrt(2.0), dtype=np.complex128)
        return cls(n, g, np.asarray(a_spectrum, dtype=np.float64), amp, **kw)

    def coarse(self) -> "SpinBathSpec":
        if self.coarse_map is None:
            raise ParameterError("no coarse_map on this spec")
        coarse_vals = np.asarray(
            sorted({float(self.coarse_map[float(v)]) for v in self.a_spectrum}),
            dtype=np.float64,
        )
        return replace(self, a_spectrum=coarse_vals, coarse_map=None)

    def up_weights(self) -> np.ndarray:
        return np.abs(self.amplitudes[:, 0]) ** 2


# ---------------------------------------------------------------------------
# reference conventions for the coupling ensemble
# ---------------------------------------------------------------------------


def coupling_rms(g) -> float:
    """Interaction energy spread under the one-coupling-per-draw reading."""
    g = np.asarray(g, dtype=np.float64)
    return float(np.sqrt(np.mean(g * g)))


def coupling_mean(g) -> float:
    """Gap to the bottom of the coupling ensemble, same reading."""
    return float(np.mean(np.asarray(g, dtype=np.float64)))


def bath_tau_min(g) -> tuple:
    """(tau_min, binding branch) from the coupling ensemble conventions."""
    dev = math.pi / (2.0 * coupling_rms(g))
    gap = math.pi / (2.0 * coupling_mean(g))
    if gap >= dev:
        return gap, "gap"
    return dev, "deviation"


def pair_extreme_factors(a_i: float, a_j: float, g_bar: float, lam: float) -> tuple:
    """(smallest, largest) per-qubit Gaussian factor for a branch pair.

    A single bath qubit contributes exp(-(g (a_i s - a_j s'))^2 / 4 lam)
    with s, s' = +-1, so the extremes are set by |a_i - a_j| and
    |a_i + a_j| at the representative coupling g_bar.
    """
    lo = min(abs(a_i - a_j), abs(a_i + a_j))
    hi = max(abs(a_i - a_j), abs(a_i + a_j))
    scale = (g_bar * g_bar) / (4.0 * lam)
    return math.exp(-scale * hi * hi), math.exp(-scale * lo * lo)


def collective_floor(g, lam: float) -> float:
    """Smallest collective Gaussian factor over contiguous sign splits.

    The splits assign + to the first M couplings and - to the rest; the
    resulting per-qubit-normalized sums bound the remaining factor family
    from below.
    """
    g = np.asarray(g, dtype=np.float64)
    n = g.size
    prefix = np.concatenate(([0.0], np.cumsum(g)))
    total = prefix[-1]
    s = (2.0 * prefix - total) / n
    return float(np.exp(-np.max(s * s) / (4.0 * lam)))


# ---------------------------------------------------------------------------
# exact support
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrequencySupport:
    """Distinct collective frequencies with their configuration weights."""

    omega: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=np.float64).ravel()
        p = np.asarray(self.p, dtype=np.float64).ravel()
        if om.size != p.size or om.size == 0:
            raise ShapeError("omega and p must align and be non-empty")
        if np.any(p < 0.0) or abs(float(p.sum()) - 1.0) > 1e-9:
            raise ParameterError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "p", p)

    @property
    def size(self) -> int:
        return self.omega.size


def omega_support(spec: SpinBathSpec) -> FrequencySupport:
    """Exact frequency distribution by per-qubit convolution.

    Frequencies are merged on a fixed decimal lattice, which keeps the
    support linear in qubit count for arithmetic couplings.  Raises a size
    error beyond MAX_EXACT_QUBITS or when the merged support would exceed
    the dense-kernel budget.
    """
    if spec.n > MAX_EXACT_QUBITS:
        raise SizeError(
            f"exact enumeration capped at {MAX_EXACT_QUBITS} qubits, got {spec.n}"
        )
    up = spec.up_weights()
    acc = {0.0: 1.0}
    for k in range(spec.n):
        gk = float(spec.g[k])
        w_up, w_dn = float(up[k]), 1.0 - float(up[k])
        nxt: dict = {}
        for om, w in acc.items():
            for delta, ww in ((gk, w_up), (-gk, w_dn)):
                if ww == 0.0:
                    continue
                key = round(om + delta, SUPPORT_DECIMALS)
                nxt[key] = nxt.get(key, 0.0) + w * ww
        if len(nxt) > MAX_SUPPORT:
            raise SizeError(
                f"frequency support exceeds {MAX_SUPPORT} points at qubit "
                f"{k + 1}; use the sampling mode"
            )
        acc = nxt
    om = np.array(sorted(acc.keys()), dtype=np.float64)
    p = np.array([acc[o] for o in om], dtype=np.float64)
    # The decimal lattice alone leaves float-drift duplicates (sums reached
    # by different addition orders straddling bucket edges), so collapse
    # neighbours closer than any physical spacing could be.
    tol = 1e-9 * max(float(np.max(np.abs(om))), 1.0)
    merged_om: list = []
    merged_p: list = []
    for o, w in zip(om, p):
        if merged_om and o - merged_om[-1] <= tol:
            tot = merged_p[-1] + w
            merged_om[-1] = (merged_om[-1] * merged_p[-1] + o * w) / tot
            merged_p[-1] = tot
        else:
            merged_om.append(float(o))
            merged_p.append(float(w))
    om = np.asarray(merged_om)
    p = np.asarray(merged_p)
    return FrequencySupport(om, p / p.sum())


def sampled_support(spec: SpinBathSpec, seed: int, count=None) -> FrequencySupport:
    """Monte-Carlo stand-in for the exact support: equal-weight draws."""
    count = spec.mc_samples if count is None else int(count)
    rng = np.random.default_rng(seed)
    signs = np.where(
        rng.random((count, spec.n)) < spec.up_weights()[None, :], 1.0, -1.0
    )
    om = signs @ spec.g
    return FrequencySupport(om, np.full(count, 1.0 / count))


def resolve_support(spec: SpinBathSpec, seed: int = 0) -> FrequencySupport:
    """Pick the evaluation path the spec's mode asks for."""
    if spec.mode == "exact":
        return omega_support(spec)
    if spec.mode == "mc":
        return sampled_support(spec, seed)
    if spec.n <= EXACT_CROSSOVER:
        try:
            return omega_support(spec)
        except SizeError:
            return sampled_support(spec, seed)
    return sampled_support(spec, seed)


# ---------------------------------------------------------------------------
# kernel calculus
# ---------------------------------------------------------------------------


def pair_kernel(
    sup: FrequencySupport, a_row: float, a_col: float, law: GaussianTimeLaw
) -> np.ndarray:
    """Kernel K[w, w'] = exp(-i t0 u - u^2/4 lam), u = a_row w - a_col w'."""
    u = a_row * sup.omega[:, None] - a_col * sup.omega[None, :]
    return np.exp(-1j * law.t0 * u - (u * u) / (4.0 * law.lam))


def weighted(sup: FrequencySupport, kernel: np.ndarray) -> np.ndarray:
    """Row-weighted kernel; chains of these give configuration-sum traces."""
    return sup.p[:, None] * kernel


def chain_trace(sup: FrequencySupport, kernels) -> complex:
    """tr of the product of branch operators given by the listed kernels."""
    mats = [weighted(sup, k) for k in kernels]
    acc = mats[0]
    for m in mats[1:]:
        acc = acc @ m
    return complex(np.trace(acc))


def trace_cross(
    sup: FrequencySupport, a_i: float, a_j: float, law: GaussianTimeLaw
) -> complex:
    """tr of the (i, j) cross operator; diagonal kernel entries only."""
    u = (a_i - a_j) * sup.omega
    vals = np.exp(-1j * law.t0 * u - (u * u) / (4.0 * law.lam))
    return complex(np.sum(sup.p * vals))


def branch_overlap(
    sup: FrequencySupport, a_i: float, a_j: float, law: GaussianTimeLaw
) -> float:
    """Frobenius norm of rho_i rho_j via a four-kernel chain."""
    ki = pair_kernel(sup, a_i, a_i, law)
    kj = pair_kernel(sup, a_j, a_j, law)
    val = chain_trace(sup, [ki, kj, kj, ki])
    return math.sqrt(max(val.real, 0.0))


def branch_purity(sup: FrequencySupport, a_i: float, law: GaussianTimeLaw) -> float:
    k = pair_kernel(sup, a_i, a_i, law)
    return max(chain_trace(sup, [k, k]).real, 0.0)


def cross_frobenius(
    sup: FrequencySupport, a_i: float, a_j: float, law: GaussianTimeLaw
) -> float:
    """Frobenius norm of the (i, j) cross operator itself (t0-free)."""
    u = a_i * sup.omega[:, None] - a_j * sup.omega[None, :]
    w = sup.p[:, None] * sup.p[None, :]
    return math.sqrt(float(np.sum(w * np.exp(-(u * u) / (2.0 * law.lam)))))


def symmetrized(sup: FrequencySupport, kernel: np.ndarray) -> np.ndarray:
    """sqrt(p) K sqrt(p): same nonzero spectrum as the full branch operator."""
    r = np.sqrt(sup.p)
    return r[:, None] * kernel * r[None, :]


def dense_branch_pair(
    spec: SpinBathSpec, a_i: float, a_j: float, law: GaussianTimeLaw
) -> np.ndarray:
    """Reference 2^n-dimensional cross operator for small baths.

    Exists to check the kernel calculus against literal configuration
    enumeration; refuses baths beyond 10 qubits.
    """
    if spec.n > 10:
        raise SizeError("dense reference path is for 10 qubits or fewer")
    combos = np.array(
        np.meshgrid(*[[1.0, -1.0]] * spec.n, indexing="ij")
    ).reshape(spec.n, -1)
    om = spec.g @ combos
    amp = np.ones(combos.shape[1], dtype=np.complex128)
    for k in range(spec.n):
        amp *= np.where(combos[k] > 0, spec.amplitudes[k, 0], spec.amplitudes[k, 1])
    u = a_i * om[:, None] - a_j * om[None, :]
    return np.outer(amp, amp.conj()) * np.exp(
        -1j * law.t0 * u - (u * u) / (4.0 * law.lam)
    )


# ---------------------------------------------------------------------------
# sampling-path estimators
# ---------------------------------------------------------------------------


def mc_trace_cross(
    spec: SpinBathSpec,
    a_i: float,
    a_j: float,
    law: GaussianTimeLaw,
    seed: int,
    count=None,
) -> tuple:
    """(estimate, standard error) for the cross trace by configuration draws."""
    sup = sampled_support(spec, seed, count)
    u = (a_i - a_j) * sup.omega
    vals = np.exp(-1j * law.t0 * u - (u * u) / (4.0 * law.lam))
    est = complex(vals.mean())
    var = float(np.var(vals.real) + np.var(vals.imag))
    return est, math.sqrt(var / sup.size)


# ---------------------------------------------------------------------------
# pointer-basis scan on the compressed support
# ---------------------------------------------------------------------------


def _kernel_condition_p(
    sup: FrequencySupport,
    a_spec: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    law: GaussianTimeLaw,
    kernels: dict,
) -> float:
    """Largest rotated branch-product norm, computed entirely on kernels."""
    no = a_spec.size
    rotated = []
    for nu in range(no):
        acc = np.zeros((sup.size, sup.size), dtype=np.complex128)
        for i in range(no):
            for j in range(no):
                wgt = b[i] * np.conj(b[j]) * c[i, nu] * np.conj(c[j, nu])
                if wgt != 0.0:
                    acc = acc + wgt * kernels[(i, j)]
        rotated.append(acc)
    best = 0.0
    for nu in range(no):
        for nup in range(nu + 1, no):
            r, s = rotated[nu], rotated[nup]
            val = chain_trace(sup, [r, s, s.conj().T, r.conj().T]).real
            best = max(best, math.sqrt(max(val, 0.0)))
    return best


def spin_bath_uniqueness(
    spec: SpinBathSpec,
    law: GaussianTimeLaw,
    b=None,
    grid: int = 12,
    t0_samples=None,
    t0_count: int = MIN_T0_SAMPLES,
    epsilon: float = EPSILON_LEMMA,
    seed: int = 0,
) -> UniquenessReport:
    """Rotated-basis scan with the same semantics as the dense version.

    Works on the frequency support, so the paper-scale baths run in
    seconds.  b defaults to an equal superposition over the object
    spectrum, the degenerate case the scan exists for.
    """
    if grid < 12:
        raise ParameterError(f"need a grid of at least 12 angles, got {grid}")
    sup = resolve_support(spec, seed)
    if sup.size > MAX_SUPPORT:
        raise SizeError("support too large for the kernel scan")
    a_spec = spec.a_spectrum
    no = a_spec.size
    if b is None:
        b = np.full(no, 1.0 / math.sqrt(no), dtype=np.complex128)
    else:
        b = np.asarray(b, dtype=np.complex128).ravel()
        if b.size != no:
            raise ParameterError("need one object amplitude per spectrum value")

    if t0_samples is None:
        freqs = []
        for i in range(no):
            for j in range(no):
                if i != j:
                    freqs.extend(np.abs((a_spec[i] - a_spec[j]) * sup.omega).tolist())
        freqs = np.asarray([f for f in freqs if f > 1e-12])
        if freqs.size == 0:
            raise ParameterError("bath carries no cross-branch frequencies")
        if t0_count < MIN_T0_SAMPLES:
            raise ParameterError(f"need at least {MIN_T0_SAMPLES} t0 samples")
        big_t = SAMPLING_PERIODS * 2.0 * math.pi / float(np.median(freqs))
        # seeded uniform draw, not a grid: lattice spectra make any regular
        # grid commensurate with the recurrence structure
        t0s = np.sort(
            np.random.default_rng(seed).uniform(big_t, 2.0 * big_t, t0_count)
        )
    else:
        t0s = np.asarray(t0_samples, dtype=np.float64).ravel()
        if t0s.size < MIN_T0_SAMPLES:
            raise ParameterError(f"need at least {MIN_T0_SAMPLES} t0 samples")

    groups = detect_degenerate_groups(b, DEGENERACY_TOL)
    thetas = np.linspace(0.0, math.pi / 2.0, grid + 2)[1:-1]
    if not np.any(np.isclose(thetas, math.pi / 4.0, atol=1e-12)):
        thetas = np.sort(np.append(thetas, math.pi / 4.0))
    phis = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)

    candidates = [((), 0.0, 0.0, np.eye(no, dtype=np.complex128))]
    for g in groups:
        for gi in range(len(g)):
            for gj in range(gi + 1, len(g)):
                for theta in thetas:
                    for phi in phis:
                        c = rotation_coefficients(
                            no, g[gi], g[gj], float(theta), float(phi)
                        )
                        candidates.append(
                            ((g[gi], g[gj]), float(theta), float(phi), c)
                        )

    hits_p = np.zeros(len(candidates))
    max_p = np.zeros(len(candidates))
    for t0 in t0s:
        law_t = GaussianTimeLaw(float(t0), law.lam, law.dt)
        kernels = {
            (i, j): pair_kernel(sup, a_spec[i], a_spec[j], law_t)
            for i in range(no)
            for j in range(no)
        }
        for idx, (_, _, _, c) in enumerate(candidates):
            cp = _kernel_condition_p(sup, a_spec, b, c, law_t, kernels)
            hits_p[idx] += cp < epsilon
            max_p[idx] = max(max_p[idx], cp)

    results = []
    for idx, (group, theta, phi, c) in enumerate(candidates):
        m = pinch_trace(b, c)
        cond_t = float(np.max(np.abs(m - np.diag(np.diag(m)))))
        results.append(
            BasisCandidate(
                group,
                theta,
                phi,
                1.0 if cond_t < epsilon else 0.0,
                float(hits_p[idx] / t0s.size),
                cond_t,
                float(max_p[idx]),
            )
        )
    original, alternatives = results[0], tuple(results[1:])
    unique = original.passes and not any(cnd.passes for cnd in alternatives)
    return UniquenessReport(unique, original, alternatives, epsilon, t0s)


# ---------------------------------------------------------------------------
# record-basis pinch distance on the compressed support
# ---------------------------------------------------------------------------


def pinch_distance(
    sup: FrequencySupport, a_spec, b, law: GaussianTimeLaw
) -> float:
    """Frobenius distance of the assembled state to its record-basis pinch.

    The record basis pairs the object eigenvectors with the eigenbasis of
    the reduced bath state.  Everything lives on the compressed support:
    the assembled state annihilates the configuration-space directions the
    compression discards, so they contribute nothing to the residual.
    """
    a_spec = np.asarray(a_spec, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.complex128).ravel()
    no = a_spec.size
    w = np.abs(b) ** 2
    sym = {
        (i, j): symmetrized(sup, pair_kernel(sup, a_spec[i], a_spec[j], law))
        for i in range(no)
        for j in range(no)
    }
    mix = sum(w[i] * sym[(i, i)] for i in range(no))
    _, u = np.linalg.eigh(mix)
    total = 0.0
    for i in range(no):
        for j in range(no):
            block = b[i] * np.conj(b[j]) * (u.conj().T @ sym[(i, j)] @ u)
            if i == j:
                block = block - np.diag(np.diag(block))
            total += float(np.sum(np.abs(block) ** 2))
    return math.sqrt(total)

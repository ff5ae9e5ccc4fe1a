"""Branch structure of a measured bipartite system under imprecise readout.

For a separable object-apparatus coupling with eigenvalue table h[alpha, beta]
the readout-time-averaged composite state organizes into apparatus branch
operators: one density per object outcome and one cross operator per ordered
outcome pair.  The diagnostics here quantify when the cross structure is
negligible (the orthogonality conditions), how much record the apparatus
keeps (mutual information), and whether any rotated outcome basis would
organize the same state equally well (the uniqueness scan).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DimensionError,
    NormalizationError,
    ParameterError,
    ShapeError,
    SizeError,
)
from .localtime import GaussianTimeLaw, WEIGHT_NORM_TOL
from .qcore import (
    ENTRY_CAP,
    DensityMatrix,
    PureState,
    SubsystemSplit,
    overlap_norm,
    partial_trace,
    validate_density,
    von_neumann_entropy,
)

EPSILON_LEMMA = 0.05
MIN_WINDOW_SAMPLES = 256
MIN_T0_SAMPLES = 8
PASS_FRACTION = 0.9
DEGENERACY_TOL = 1e-9
SAMPLING_PERIODS = 50


def _unit_amplitudes(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=np.complex128).ravel()
    if a.size == 0 or not np.all(np.isfinite(a.real) & np.isfinite(a.imag)):
        raise ShapeError(f"{name} must be finite and non-empty")
    norm = float(np.sum(np.abs(a) ** 2))
    if abs(norm - 1.0) > WEIGHT_NORM_TOL:
        raise NormalizationError(f"{name} weights sum to {norm!r}, not 1")
    return a


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeparableInteraction:
    """Coupling eigenvalue table h[alpha, beta] of a product interaction."""

    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.float64)
        if h.ndim != 2 or h.shape[0] < 2 or h.shape[1] < 1:
            raise DimensionError(
                f"need an (outcomes >= 2, apparatus levels >= 1) table, got {h.shape}"
            )
        if not np.all(np.isfinite(h)):
            raise ShapeError("coupling table must be finite")
        object.__setattr__(self, "h", h)

    @property
    def dim_o(self) -> int:
        return self.h.shape[0]

    @property
    def dim_a(self) -> int:
        return self.h.shape[1]


def _branch_block(
    h_row: np.ndarray, h_col: np.ndarray, d: np.ndarray, law: GaussianTimeLaw
) -> np.ndarray:
    gap = np.subtract.outer(h_row, h_col)
    return np.outer(d, d.conj()) * np.exp(
        -1j * law.t0 * gap - (gap * gap) / (4.0 * law.lam)
    )


@dataclass(frozen=True)
class BranchFamily:
    """Apparatus branch operators of an averaged composite state.

    rho_a maps each outcome to its (unit-trace, positive) branch density;
    rho_cross maps each ordered outcome pair to the cross operator whose
    trace decay drives the orthogonality diagnostics.  The family keeps its
    ingredients so it can be re-evaluated at other center times.
    """

    interaction: SeparableInteraction
    b: np.ndarray
    d: np.ndarray
    law: GaussianTimeLaw
    rho_a: dict
    rho_cross: dict

    def cross(self, alpha: int, alpha_p: int) -> np.ndarray:
        if alpha == alpha_p:
            return self.rho_a[alpha].matrix
        return self.rho_cross[(alpha, alpha_p)]

    @property
    def dim_o(self) -> int:
        return self.interaction.dim_o

    @property
    def dim_a(self) -> int:
        return self.interaction.dim_a

    def at_time(self, t0: float) -> "BranchFamily":
        law = GaussianTimeLaw(float(t0), self.law.lam, self.law.dt)
        return branch_family(self.interaction, self.b, self.d, law)


@dataclass(frozen=True)
class CorrelationAmplitude:
    """Normalized phase ensemble chi(t) = sum_k p_k exp(-i t omega_k).

    zeta is the total suppressed weight and epsilon the per-term Gaussian
    factors, so that the raw quantity it came from equals zeta * chi(t).
    """

    p: np.ndarray
    omega: np.ndarray
    zeta: float
    epsilon: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64).ravel()
        om = np.asarray(self.omega, dtype=np.float64).ravel()
        eps = np.asarray(self.epsilon, dtype=np.float64).ravel()
        if p.size != om.size or p.size != eps.size or p.size == 0:
            raise ShapeError("p, omega, epsilon must align and be non-empty")
        if np.any(p < 0.0) or abs(float(p.sum()) - 1.0) > 1e-9:
            raise NormalizationError("weights p must be nonnegative and sum to 1")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "zeta", float(self.zeta))

    @classmethod
    def for_trace(
        cls,
        interaction: SeparableInteraction,
        d,
        lam: float,
        alpha: int,
        alpha_p: int,
    ) -> "CorrelationAmplitude":
        """Ensemble behind tr rho_cross(alpha, alpha'): one term per level."""
        d = _unit_amplitudes(d, "apparatus amplitudes")
        if d.size != interaction.dim_a:
            raise DimensionError("amplitude count must match the coupling table")
        om = interaction.h[alpha] - interaction.h[alpha_p]
        eps = np.exp(-(om * om) / (4.0 * lam))
        return cls._build(np.abs(d) ** 2, om, eps)

    @classmethod
    def for_product_entry(
        cls,
        interaction: SeparableInteraction,
        d,
        lam: float,
        alpha: int,
        alpha_p: int,
        beta: int,
        beta_pp: int,
    ) -> "CorrelationAmplitude":
        """Ensemble behind entry (beta, beta'') of rho_a[alpha] rho_a[alpha']."""
        d = _unit_amplitudes(d, "apparatus amplitudes")
        if d.size != interaction.dim_a:
            raise DimensionError("amplitude count must match the coupling table")
        h = interaction.h
        ga = h[alpha, beta] - h[alpha]          # gaps inside branch alpha
        gb = h[alpha_p] - h[alpha_p, beta_pp]   # gaps inside branch alpha'
        eps = np.exp(-(ga * ga + gb * gb) / (4.0 * lam))
        om = h[alpha] - h[alpha_p]
        return cls._build(np.abs(d) ** 2, om, eps)

    @classmethod
    def _build(cls, w: np.ndarray, om: np.ndarray, eps: np.ndarray):
        zeta = float(w @ eps)
        if zeta <= 0.0:
            raise ParameterError(
                "all suppression factors underflowed; the ensemble is empty"
            )
        return cls(w * eps / zeta, om, zeta, eps)


@dataclass(frozen=True)
class BasisCandidate:
    """One rotated outcome basis examined by the uniqueness scan."""

    group: tuple
    theta: float
    phi: float
    frac_t: float        # 1.0 or 0.0; condition-T carries no time dependence
    frac_p: float        # fraction of sampled t0 with condition-P < epsilon
    max_condition_t: float
    max_condition_p: float

    @property
    def passes(self) -> bool:
        return min(self.frac_t, self.frac_p) >= PASS_FRACTION


@dataclass(frozen=True)
class UniquenessReport:
    """Outcome of scanning rotated bases inside degenerate weight groups."""

    unique: bool
    original: BasisCandidate
    alternatives: tuple
    epsilon: float
    t0_samples: np.ndarray

    def passing_alternatives(self) -> tuple:
        return tuple(c for c in self.alternatives if c.passes)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def evolve_branches(
    interaction: SeparableInteraction, b, d, t: float
) -> PureState:
    """Composite pure state at time t, outcome-major ordering."""
    b = _unit_amplitudes(b, "object amplitudes")
    d = _unit_amplitudes(d, "apparatus amplitudes")
    if b.size != interaction.dim_o or d.size != interaction.dim_a:
        raise DimensionError("amplitude counts must match the coupling table")
    amps = np.outer(b, d) * np.exp(-1j * float(t) * interaction.h)
    return PureState(amps.ravel())


def branch_family(
    interaction: SeparableInteraction, b, d, law: GaussianTimeLaw
) -> BranchFamily:
    """Materialize every branch operator of the averaged composite state."""
    b = _unit_amplitudes(b, "object amplitudes")
    d = _unit_amplitudes(d, "apparatus amplitudes")
    if b.size != interaction.dim_o or d.size != interaction.dim_a:
        raise DimensionError("amplitude counts must match the coupling table")
    h = interaction.h
    rho_a = {
        a: validate_density(_branch_block(h[a], h[a], d, law))
        for a in range(interaction.dim_o)
    }
    rho_cross = {
        (a, ap): _branch_block(h[a], h[ap], d, law)
        for a in range(interaction.dim_o)
        for ap in range(interaction.dim_o)
        if a != ap
    }
    return BranchFamily(interaction, b, d, law, rho_a, rho_cross)


def assemble_sigma(family: BranchFamily) -> DensityMatrix:
    """Averaged composite state assembled from its branch operators."""
    no, na = family.dim_o, family.dim_a
    dim = no * na
    if dim * dim > ENTRY_CAP:
        raise SizeError(f"composite state would hold {dim * dim} entries")
    b = family.b
    out = np.zeros((dim, dim), dtype=np.complex128)
    for a in range(no):
        for ap in range(no):
            block = b[a] * np.conj(b[ap]) * family.cross(a, ap)
            out[a * na : (a + 1) * na, ap * na : (ap + 1) * na] = block
    return validate_density(out)


def correlation_amplitude(ca: CorrelationAmplitude, t) -> complex:
    """Evaluate chi(t); scalars in, scalar out, arrays in, array out."""
    t = np.asarray(t, dtype=np.float64)
    out = np.exp(-1j * np.multiply.outer(t, ca.omega)) @ ca.p
    return complex(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def window_average(
    f: Callable[[float], complex],
    t_start: float,
    length: float,
    samples: int = 512,
) -> tuple:
    """Uniform midpoint average of f over [t_start, t_start + length].

    Returns (mean, second moment of |f|).  Deterministic for a fixed sample
    count; midpoint placement cancels whole periods of a phasor exactly.
    """
    if samples < MIN_WINDOW_SAMPLES:
        raise ParameterError(
            f"need at least {MIN_WINDOW_SAMPLES} samples, got {samples}"
        )
    if not (length > 0.0 and math.isfinite(length)):
        raise ParameterError(f"window length must be positive, got {length}")
    ts = t_start + (np.arange(samples) + 0.5) * (length / samples)
    vals = np.array([f(float(t)) for t in ts])
    mean = vals.mean()
    second = float(np.mean(np.abs(vals) ** 2))
    if abs(mean.imag) == 0.0:
        mean = mean.real
    return mean, second


@dataclass(frozen=True)
class PairDiagnostics:
    pair: tuple
    max_overlap_norm: float
    max_trace_abs: float
    avg_overlap_norm: float
    avg_trace_abs: float


@dataclass(frozen=True)
class Lemma41Report:
    pairs: tuple
    epsilon: float
    satisfied: bool

    def worst(self) -> float:
        return max(
            max(p.avg_overlap_norm, p.avg_trace_abs) for p in self.pairs
        )


def lemma41_report(
    family: BranchFamily,
    t0_samples,
    length: float,
    epsilon: float = EPSILON_LEMMA,
    window_samples: int = MIN_WINDOW_SAMPLES,
) -> Lemma41Report:
    """Orthogonality diagnostics for every branch pair.

    For each unordered outcome pair the report tracks the product norm of
    the two branch densities and the modulus of the cross-operator trace:
    maxima over the given t0 samples and uniform window averages over
    [min(t0_samples), +length].  The verdict requires both averages below
    epsilon for every pair.
    """
    t0s = np.asarray(t0_samples, dtype=np.float64).ravel()
    if t0s.size < MIN_T0_SAMPLES:
        raise ParameterError(f"need at least {MIN_T0_SAMPLES} t0 samples")
    pairs = []
    ok = True
    for a in range(family.dim_o):
        for ap in range(a + 1, family.dim_o):
            fam_cache = {}

            def fam_at(t0: float) -> BranchFamily:
                if t0 not in fam_cache:
                    fam_cache[t0] = family.at_time(t0)
                return fam_cache[t0]

            def f_overlap(t0: float) -> float:
                g = fam_at(t0)
                return overlap_norm(g.rho_a[a], g.rho_a[ap])

            def f_trace(t0: float) -> float:
                g = fam_at(t0)
                return abs(np.trace(g.rho_cross[(a, ap)]))

            max_ov = max(f_overlap(float(t)) for t in t0s)
            max_tr = max(f_trace(float(t)) for t in t0s)
            avg_ov, _ = window_average(
                f_overlap, float(t0s.min()), length, window_samples
            )
            avg_tr, _ = window_average(
                f_trace, float(t0s.min()), length, window_samples
            )
            fam_cache.clear()
            diag = PairDiagnostics(
                (a, ap), float(max_ov), float(max_tr), float(avg_ov), float(avg_tr)
            )
            pairs.append(diag)
            if diag.avg_overlap_norm >= epsilon or diag.avg_trace_abs >= epsilon:
                ok = False
    return Lemma41Report(tuple(pairs), epsilon, ok)


def mutual_information(family: BranchFamily) -> tuple:
    """(I, H_O): apparatus-object mutual information and outcome entropy.

    I = S(sum_a |b_a|^2 rho_a) - sum_a |b_a|^2 S(rho_a), in nats.  The
    outcome entropy uses the squared amplitude weights.  I <= H_O, with
    equality for orthogonally supported branch densities.
    """
    w = np.abs(family.b) ** 2
    mix = np.zeros((family.dim_a,) * 2, dtype=np.complex128)
    for a in range(family.dim_o):
        mix += w[a] * family.rho_a[a].matrix
    s_mix = von_neumann_entropy(mix)
    s_branches = sum(
        w[a] * von_neumann_entropy(family.rho_a[a]) for a in range(family.dim_o)
    )
    info = max(s_mix - s_branches, 0.0)
    pos = w[w > 0.0]
    h_o = float(-np.sum(pos * np.log(pos)))
    return float(info), h_o


def _check_orthonormal(u: np.ndarray, name: str) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ShapeError(f"{name} must be a square matrix of column vectors")
    dev = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
    if dev > 1e-10:
        raise ParameterError(f"{name} is not orthonormal (deviation {dev:.3e})")
    return u


def classical_classical_distance(
    sigma, split: SubsystemSplit, basis_o, basis_a=None
) -> float:
    """Frobenius distance from sigma to its product-basis diagonal pinch.

    basis_o fixes the outcome side; basis_a defaults to the eigenbasis of
    the reduced apparatus state, the natural candidate record basis.  Zero
    exactly when sigma is diagonal in the chosen product basis.
    """
    if len(split.dims) != 2:
        raise DimensionError("expected a two-factor split")
    a = np.asarray(getattr(sigma, "matrix", sigma), dtype=np.complex128)
    split.check_matches(a.shape[0])
    u_o = _check_orthonormal(basis_o, "outcome basis")
    if u_o.shape[0] != split.dims[0]:
        raise DimensionError("outcome basis does not match the split")
    if basis_a is None:
        rho_a = partial_trace(sigma, split, keep=1)
        _, u_a = np.linalg.eigh(rho_a.matrix)
    else:
        u_a = _check_orthonormal(basis_a, "record basis")
        if u_a.shape[0] != split.dims[1]:
            raise DimensionError("record basis does not match the split")
    u = np.kron(u_o, u_a)
    rotated = u.conj().T @ a @ u
    off = rotated - np.diag(np.diag(rotated))
    return float(np.linalg.norm(off, "fro"))


# ---------------------------------------------------------------------------
# uniqueness scan
# ---------------------------------------------------------------------------


def detect_degenerate_groups(b, tol: float = DEGENERACY_TOL) -> tuple:
    """Group outcome indices whose squared amplitudes agree within tol."""
    w = np.abs(np.asarray(b, dtype=np.complex128).ravel()) ** 2
    order = np.argsort(w, kind="stable")
    groups, current = [], [int(order[0])]
    for i, j in zip(order[:-1], order[1:]):
        if abs(w[j] - w[i]) <= tol:
            current.append(int(j))
        else:
            groups.append(tuple(current))
            current = [int(j)]
    groups.append(tuple(current))
    return tuple(g for g in groups if len(g) >= 2)


def default_t0_samples(
    family: BranchFamily, count: int = MIN_T0_SAMPLES, seed: int = 0
):
    """Late-time readout samples drawn uniformly from [T, 2T].

    T is SAMPLING_PERIODS median cross-frequency periods.  The draw is
    seeded rather than gridded: branch spectra often sit on an arithmetic
    lattice, and a regular grid commensurate with it can land every sample
    on a recurrence (or dodge all of them), biasing the scan either way.
    """
    h = family.interaction.h
    freqs = []
    for a in range(family.dim_o):
        for ap in range(family.dim_o):
            if a != ap:
                freqs.extend(np.abs(h[a] - h[ap]).tolist())
    freqs = np.asarray([f for f in freqs if f > 1e-12])
    if freqs.size == 0:
        raise ParameterError(
            "interaction has no cross-branch frequencies; late times are undefined"
        )
    period = 2.0 * math.pi / float(np.median(freqs))
    big_t = SAMPLING_PERIODS * period
    rng = np.random.default_rng(seed)
    return np.sort(rng.uniform(big_t, 2.0 * big_t, count)), big_t


def rotation_coefficients(dim_o: int, i: int, j: int, theta: float, phi: float):
    """Unitary mixing outcomes i and j; returns c[alpha, nu] = <nu|alpha>."""
    u = np.eye(dim_o, dtype=np.complex128)
    u[i, i] = math.cos(theta)
    u[j, i] = math.sin(theta) * np.exp(1j * phi)
    u[i, j] = -math.sin(theta) * np.exp(-1j * phi)
    u[j, j] = math.cos(theta)
    # columns of u are the rotated kets; c[alpha, nu] = conj(u[alpha, nu])
    return u.conj()


def pinch_trace(b, c: np.ndarray) -> np.ndarray:
    """Matrix of rotated-basis cross traces, tr R_{nu nu'}.

    Tracing a rotated branch operator kills every apparatus factor except
    the unit diagonal ones, leaving the weight matrix sum_a |b_a|^2
    c[a, nu] conj(c[a, nu']) with no time dependence at all.
    """
    w = np.abs(np.asarray(b, dtype=np.complex128).ravel()) ** 2
    return (c.T * w) @ np.conj(c)


def _condition_t(b, c: np.ndarray) -> float:
    m = pinch_trace(b, c)
    off = m - np.diag(np.diag(m))
    return float(np.max(np.abs(off)))


def _rotated_branch(family: BranchFamily, c: np.ndarray, nu: int) -> np.ndarray:
    b = family.b
    acc = np.zeros((family.dim_a,) * 2, dtype=np.complex128)
    for a in range(family.dim_o):
        for ap in range(family.dim_o):
            wgt = b[a] * np.conj(b[ap]) * c[a, nu] * np.conj(c[ap, nu])
            if wgt != 0.0:
                acc += wgt * family.cross(a, ap)
    return acc


def _condition_p_at(family: BranchFamily, c: np.ndarray) -> float:
    """Largest branch-product norm among rotated outcomes, full cross sum."""
    no = family.dim_o
    r_diag = [_rotated_branch(family, c, nu) for nu in range(no)]
    return max(
        overlap_norm(r_diag[nu], r_diag[nup])
        for nu in range(no)
        for nup in range(nu + 1, no)
    )


def _scan_candidate(
    family: BranchFamily, t0s: np.ndarray, c: np.ndarray, epsilon: float
) -> tuple:
    cond_t = _condition_t(family.b, c)
    frac_t = 1.0 if cond_t < epsilon else 0.0
    hits_p = 0
    max_p = 0.0
    for t0 in t0s:
        fam = family.at_time(float(t0))
        cp = _condition_p_at(fam, c)
        hits_p += cp < epsilon
        max_p = max(max_p, cp)
    return frac_t, hits_p / t0s.size, cond_t, max_p


def uniqueness_scan(
    family: BranchFamily,
    degenerate_groups=None,
    grid: int = 12,
    t0_samples=None,
    epsilon: float = EPSILON_LEMMA,
    seed: int = 0,
) -> UniquenessReport:
    """Scan rotated outcome bases inside degenerate weight groups.

    Rotations that mix outcomes with different weights change the state's
    diagonal and are excluded by construction; within a degenerate group a
    two-parameter family (theta, phi) of rotations is sampled, always
    including the maximal mixing theta = pi/4.  Condition-T is the largest
    off-diagonal modulus of the trace pinch, which carries no time
    dependence; condition-P is the largest rotated branch-product norm,
    evaluated at every sampled late time.  A candidate basis passes if both
    hold below epsilon on at least PASS_FRACTION of the samples; the
    original basis is unique exactly when it passes and no alternative
    does.
    """
    if grid < 12:
        raise ParameterError(f"need a grid of at least 12 angles, got {grid}")
    if t0_samples is None:
        t0s, _ = default_t0_samples(family, seed=seed)
    else:
        t0s = np.asarray(t0_samples, dtype=np.float64).ravel()
        if t0s.size < MIN_T0_SAMPLES:
            raise ParameterError(f"need at least {MIN_T0_SAMPLES} t0 samples")
    if degenerate_groups is None:
        groups = detect_degenerate_groups(family.b)
    else:
        groups = tuple(tuple(int(i) for i in g) for g in degenerate_groups)
        w = np.abs(family.b) ** 2
        for g in groups:
            if len(g) < 2:
                raise ParameterError(f"degenerate group {g} has fewer than 2 members")
            if np.ptp(w[list(g)]) > DEGENERACY_TOL:
                raise ParameterError(
                    f"group {g} weights spread {np.ptp(w[list(g)]):.3e} beyond tolerance"
                )

    identity = np.eye(family.dim_o, dtype=np.complex128)
    ft, fp, mt, mp = _scan_candidate(family, t0s, identity, epsilon)
    original = BasisCandidate((), 0.0, 0.0, ft, fp, mt, mp)

    thetas = np.linspace(0.0, math.pi / 2.0, grid + 2)[1:-1]
    if not np.any(np.isclose(thetas, math.pi / 4.0, atol=1e-12)):
        thetas = np.sort(np.append(thetas, math.pi / 4.0))
    phis = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)

    alternatives = []
    for g in groups:
        for gi in range(len(g)):
            for gj in range(gi + 1, len(g)):
                i, j = g[gi], g[gj]
                for theta in thetas:
                    for phi in phis:
                        c = rotation_coefficients(
                            family.dim_o, i, j, float(theta), float(phi)
                        )
                        ft, fp, mt, mp = _scan_candidate(family, t0s, c, epsilon)
                        alternatives.append(
                            BasisCandidate(
                                (i, j), float(theta), float(phi), ft, fp, mt, mp
                            )
                        )
    unique = original.passes and not any(c.passes for c in alternatives)
    return UniquenessReport(unique, original, tuple(alternatives), epsilon, t0s)


# ---------------------------------------------------------------------------
# three-party assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TripartiteResult:
    """Averaged state of object + record + environment, plus its reductions.

    sigma is materialized only when it fits under the dense entry cap; the
    reductions and the per-pair environment trace moduli are always present.
    pointer_residual is the Frobenius distance between the object-record
    reduction and its ideal perfectly correlated diagonal form.
    """

    sigma: DensityMatrix | None
    rho_oa: DensityMatrix
    rho_o: DensityMatrix
    env_trace_moduli: dict
    pointer_residual: float


def tripartite_sigma(
    b,
    apparatus_basis,
    env_interaction: SeparableInteraction,
    d_env,
    law: GaussianTimeLaw,
) -> TripartiteResult:
    """Average a premeasurement monitored by an environment.

    The object-record pair starts perfectly correlated over the outcomes
    (amplitudes b); the environment couples through env_interaction with
    initial amplitudes d_env.  The environment branch operators take the
    same form as the bipartite ones, and the object-record reduction keeps
    only the outcome diagonal up to the environment cross traces.
    """
    b = _unit_amplitudes(b, "outcome amplitudes")
    n = b.size
    if env_interaction.dim_o != n:
        raise DimensionError(
            f"environment table has {env_interaction.dim_o} outcome rows, need {n}"
        )
    if apparatus_basis is None:
        u_a = np.eye(n, dtype=np.complex128)
    else:
        u_a = np.asarray(apparatus_basis, dtype=np.complex128)
        if u_a.ndim != 2 or u_a.shape[1] != n:
            raise DimensionError("need one record column per outcome")
        dev = float(np.max(np.abs(u_a.conj().T @ u_a - np.eye(n))))
        if dev > 1e-10:
            raise ParameterError(f"record basis not orthonormal (deviation {dev:.3e})")
    fam = branch_family(env_interaction, b, d_env, law)
    dim_a = u_a.shape[0]
    dim_e = env_interaction.dim_a

    traces = {
        (a, ap): complex(np.trace(fam.rho_cross[(a, ap)]))
        for a in range(n)
        for ap in range(n)
        if a != ap
    }

    rho_oa = np.zeros((n * dim_a, n * dim_a), dtype=np.complex128)
    ideal = np.zeros_like(rho_oa)
    for a in range(n):
        for ap in range(n):
            tau = 1.0 if a == ap else traces[(a, ap)]
            block = np.outer(u_a[:, a], u_a[:, ap].conj())
            piece = b[a] * np.conj(b[ap]) * tau
            rho_oa[
                a * dim_a : (a + 1) * dim_a, ap * dim_a : (ap + 1) * dim_a
            ] = piece * block
            if a == ap:
                ideal[
                    a * dim_a : (a + 1) * dim_a, a * dim_a : (a + 1) * dim_a
                ] = (np.abs(b[a]) ** 2) * block
    rho_oa_d = validate_density(rho_oa)
    residual = float(np.linalg.norm(rho_oa - ideal, "fro"))
    rho_o = partial_trace(rho_oa_d, SubsystemSplit((n, dim_a)), keep=0)

    dim = n * dim_a * dim_e
    sigma = None
    if dim * dim <= ENTRY_CAP:
        full = np.zeros((dim, dim), dtype=np.complex128)
        for a in range(n):
            for ap in range(n):
                block = (
                    b[a]
                    * np.conj(b[ap])
                    * np.kron(np.outer(u_a[:, a], u_a[:, ap].conj()), fam.cross(a, ap))
                )
                full[
                    a * dim_a * dim_e : (a + 1) * dim_a * dim_e,
                    ap * dim_a * dim_e : (ap + 1) * dim_a * dim_e,
                ] = block
        sigma = validate_density(full)

    moduli = {pair: abs(t) for pair, t in traces.items()}
    return TripartiteResult(sigma, rho_oa_d, rho_o, moduli, residual)

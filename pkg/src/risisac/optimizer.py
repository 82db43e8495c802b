"""Alternating minimization of the delay CRB over receive beam, band split
and RIS phases, with the baseline schemes used in the sweep harness.

One outer iteration updates, in order:

1. receive beamformer ``f`` by semidefinite relaxation (SDR) at fixed
   split and phases, maximizing the sensing combining gain |f^H a|^2
   subject to the rate constraints;
2. splitting ratio ``alpha`` by exhaustive grid search over feasible
   grid points (the Fisher information is monotone-cheap to evaluate);
3. RIS phases by SDR on the lifted unit-modulus vector, maximizing
   summed rate slacks.  The phases do not enter the CRB, so this step
   only enlarges the feasible region of the next iteration.

Steps are accepted only when they keep the iterate feasible and do not
increase the CRB, which makes the recorded objective sequence monotone
by construction.
"""

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from . import sdp
from .channel import ChannelSet, RisPhase, cascade
from .linalg import outer
from .metrics import LinkBudget, crb, fim_bracket, rate, sinr_k, sinr_s
from .sdp import RecoveryFailed, SdpProblem, SdpStatus, TraceConstraint


class EmptyFeasibleSet(RuntimeError):
    pass


class Scheme(enum.Enum):
    PROPOSED = "proposed"
    RANDOM_RIS = "random-ris"
    FULL_ISAC = "full-isac"
    EQUAL_SPLIT = "equal-split"
    FULL_SO = "full-so"


#: schemes whose splitting ratio is pinned rather than optimized
FIXED_ALPHA = {Scheme.FULL_ISAC: 0.0, Scheme.EQUAL_SPLIT: 0.5, Scheme.FULL_SO: 1.0}

#: normalized feasibility slack on rate/threshold - 1
FEAS_TOL = 1e-6


@dataclass
class AoSettings:
    tol: float = 1e-3            # relative CRB change declaring convergence
    max_iter: int = 50
    alpha_step: float = 0.01
    sdr_tol: float = 1e-6
    randomization_samples: int = 200


@dataclass
class DesignVariables:
    f: np.ndarray
    alpha: float
    phase: RisPhase


@dataclass
class AoTrace:
    crb_values: list = field(default_factory=list)
    alpha_values: list = field(default_factory=list)
    feasible_flags: list = field(default_factory=list)
    events: list = field(default_factory=list)
    converged: bool = False

    @property
    def n_iterations(self) -> int:
        return len(self.crb_values)


@dataclass(frozen=True)
class AoResult:
    variables: DesignVariables
    crb_s2: float
    rate_s: float
    rates_k: np.ndarray
    feasible: bool
    trace: AoTrace
    scheme: Scheme
    wall_seconds: float


def rate_margins(alpha: float, f: np.ndarray, channels: ChannelSet,
                 phase: RisPhase, budget: LinkBudget) -> np.ndarray:
    """Normalized slacks rate/threshold - 1, IIoT-(I) first."""
    if alpha >= 1.0:
        return np.full(1 + channels.n_devices, -np.inf)
    b = budget.bandwidth
    out = [rate(alpha, b, sinr_s(alpha, f, channels, phase, budget)) / budget.rate_s_th - 1.0]
    for k in range(channels.n_devices):
        out.append(rate(alpha, b, sinr_k(k, alpha, f, channels, phase, budget))
                   / budget.rate_k_th - 1.0)
    return np.array(out)


def is_feasible(alpha, f, channels, phase, budget) -> bool:
    return bool(rate_margins(alpha, f, channels, phase, budget).min() >= -FEAS_TOL)


def _sinr_floor(alpha: float, bandwidth: float, threshold: float) -> float:
    """Required SINR 2^(R/((1-alpha) B)) - 1 behind a rate threshold."""
    return 2.0 ** (threshold / ((1.0 - alpha) * bandwidth)) - 1.0


def _echo_matrix(alpha: float, channels: ChannelSet, budget: LinkBudget) -> np.ndarray:
    from .metrics import band_split, eta_isac
    split = band_split(alpha, budget)
    eta = eta_isac(alpha, budget.bandwidth, budget.sigma_tau2)
    return abs(channels.beta_s) ** 2 * eta * split.p_isac * outer(channels.a_ap_s)


def build_receive_sdr(alpha: float, channels: ChannelSet, phase: RisPhase,
                      budget: LinkBudget, mode: str = "gain") -> SdpProblem:
    """SDR of the beamforming step on F = f f^H (complex dim N, embedded).

    ``mode="gain"`` maximizes tr(a a^H F) subject to the rate constraints
    written as linear trace inequalities and tr F = 1.  ``mode="restore"``
    instead maximizes a common margin multiplier on the rate constraints,
    used to pull an infeasible iterate toward feasibility.
    """
    if mode not in ("gain", "restore"):
        raise ValueError(f"unknown beam-step mode {mode!r}")
    n = channels.n_ap
    hbars = [cascade(h, phase, channels.h_ap_ris) for h in channels.h_ris_k]
    p = np.broadcast_to(budget.p_k, (len(hbars),))
    echo = _echo_matrix(alpha, channels, budget)
    noise = (1.0 - alpha) * budget.sigma2

    c_a = _sinr_floor(alpha, budget.bandwidth, budget.rate_s_th)
    d_a = _sinr_floor(alpha, budget.bandwidth, budget.rate_k_th)

    if mode == "restore":
        shift, n_scalars, c_scalars = 10.0, 1, np.array([1.0])

        def slack_d(rhs_scale):
            return np.array([-rhs_scale])
    else:
        shift, n_scalars, c_scalars = 0.0, 0, None

        def slack_d(_rhs_scale):
            return None

    ineq = []
    if budget.coherent_interference:
        interf_s = budget.p_k_common() * outer(sum(hbars)) if hbars else 0.0
    else:
        interf_s = sum(pk * outer(hb) for pk, hb in zip(p, hbars))
    a_s = budget.p_s * outer(channels.h_ap_s) - c_a * (interf_s + echo)
    ineq.append(TraceConstraint(A=sdp.embed_complex(a_s) / 2,
                                b=(1.0 - shift) * c_a * noise,
                                d=slack_d(c_a * noise)))
    for k in range(len(hbars)):
        cross = sum(p[i] * outer(hbars[i]) for i in range(len(hbars)) if i != k)
        a_k = p[k] * outer(hbars[k]) - d_a * (cross + echo)
        ineq.append(TraceConstraint(A=sdp.embed_complex(a_k) / 2,
                                    b=(1.0 - shift) * d_a * noise,
                                    d=slack_d(d_a * noise)))

    objective = None if mode == "restore" \
        else sdp.embed_complex(outer(channels.a_ap_s)) / 2
    return SdpProblem(
        dim=2 * n, sense="max", C=objective,
        c_scalars=c_scalars, n_scalars=n_scalars,
        eq=[TraceConstraint(A=np.eye(2 * n) / 2, b=1.0)],
        ineq=ineq,
    )


def _recover_best(x_mat, constraint, objective, rng, n_samples):
    """Best of the eigen and randomized rank-one candidates by objective."""
    candidates = []
    try:
        candidates.append(sdp.rank_one_recover(
            x_mat, constraint=constraint, mode=sdp.RecoveryMode.EIGEN,
            feasibility_check=lambda _v: True, rng=rng, n_samples=1,
        ))
    except RecoveryFailed:
        pass
    try:
        candidates.append(sdp.rank_one_recover(
            x_mat, constraint=constraint, mode=sdp.RecoveryMode.RANDOMIZE,
            objective=objective, rng=rng, n_samples=n_samples,
        ))
    except RecoveryFailed:
        pass
    if not candidates:
        return None
    return max(candidates, key=objective)


def solve_receive(alpha: float, channels: ChannelSet, phase: RisPhase,
                  budget: LinkBudget, settings: AoSettings,
                  rng: np.random.Generator,
                  mode: str = "gain") -> np.ndarray | None:
    """Beamformer from the SDR, or None when the step is infeasible."""
    prob = build_receive_sdr(alpha, channels, phase, budget, mode=mode)
    sol = sdp.solve(prob, tol=settings.sdr_tol)
    if sol.status is not SdpStatus.OPTIMAL:
        return None
    f_mat = sdp.de_embed(sol.X)

    def check(f):
        return is_feasible(alpha, f, channels, phase, budget)

    def gain(f):
        return abs(np.vdot(f, channels.a_ap_s)) ** 2

    def margin(f):
        return float(rate_margins(alpha, f, channels, phase, budget).min())

    if mode == "restore":
        return _recover_best(f_mat, "unit_norm", margin, rng,
                             settings.randomization_samples)
    try:
        return sdp.rank_one_recover(
            f_mat, constraint="unit_norm", feasibility_check=check,
            objective=gain, rng=rng, n_samples=settings.randomization_samples,
        )
    except RecoveryFailed:
        return None


def alpha_grid(settings: AoSettings) -> np.ndarray:
    num = int(round(1.0 / settings.alpha_step))
    return np.arange(num) * settings.alpha_step


def solve_alpha(f: np.ndarray, channels: ChannelSet, phase: RisPhase,
                budget: LinkBudget, settings: AoSettings) -> float:
    """Feasible grid point with the largest Fisher information.

    Raises ``EmptyFeasibleSet`` when no grid point satisfies the rates.
    """
    best, best_val = None, -np.inf
    for alpha in alpha_grid(settings):
        if not is_feasible(alpha, f, channels, phase, budget):
            continue
        val = fim_bracket(alpha, budget)
        if val > best_val:
            best, best_val = float(alpha), val
    if best is None:
        raise EmptyFeasibleSet("no splitting ratio satisfies the rate thresholds")
    return best


def least_violation_alpha(f: np.ndarray, channels: ChannelSet, phase: RisPhase,
                          budget: LinkBudget, settings: AoSettings) -> float:
    """Grid point with the best worst-case rate margin (infeasible fallback)."""
    grid = alpha_grid(settings)
    margins = [rate_margins(a, f, channels, phase, budget).min() for a in grid]
    return float(grid[int(np.argmax(margins))])


def build_ris_sdr(alpha: float, f: np.ndarray, channels: ChannelSet,
                  budget: LinkBudget, mode: str = "slack") -> SdpProblem:
    """SDR of the phase step on U = u u^H with u the conjugated phase vector.

    With r_k[m] = conj((H f)_m) h_k[m], the cascaded gain is u^H r_k, so
    each |f^H hbar_k|^2 becomes tr(r_k r_k^H U).

    ``mode="slack"`` maximizes the sum of nonnegative residual-SINR
    slacks on the rate constraints (infeasible when the current beam and
    split admit no feasible phases).  ``mode="restore"`` instead
    maximizes a common margin multiplier on all constraints that may go
    negative, which pulls an infeasible iterate toward feasibility.
    """
    if mode not in ("slack", "restore"):
        raise ValueError(f"unknown phase-step mode {mode!r}")
    m = channels.m_ris
    hf = channels.h_ap_ris @ f
    r = [np.conj(hf) * h for h in channels.h_ris_k]
    p = np.broadcast_to(budget.p_k, (len(r),))
    n_con = 1 + len(r)

    echo = _echo_matrix(alpha, channels, budget)
    echo_pow = float(np.real(np.vdot(f, echo @ f)))
    noise = (1.0 - alpha) * budget.sigma2
    c_a = _sinr_floor(alpha, budget.bandwidth, budget.rate_s_th)
    d_a = _sinr_floor(alpha, budget.bandwidth, budget.rate_k_th)
    sig_s = budget.p_s * abs(np.vdot(f, channels.h_ap_s)) ** 2
    base = echo_pow + noise

    if mode == "slack":
        shift = 0.0
        n_scalars = n_con
        c_scalars = np.ones(n_con)

        def slack_d(j, _rhs_scale):
            d = np.zeros(n_con)
            d[j] = -1.0
            return d
    else:
        # one common margin t >= -shift via the nonnegative s = t + shift,
        # scaled per row by its requirement; maximizing s pulls the worst
        # constraint margin up even from an infeasible starting point
        shift = 10.0
        n_scalars = 1
        c_scalars = np.array([1.0])

        def slack_d(_j, rhs_scale):
            return np.array([-rhs_scale])

    ineq = []
    if budget.coherent_interference:
        interf_s = budget.p_k_common() * outer(sum(r)) if r else None
    else:
        interf_s = sum(pk * outer(rk) for pk, rk in zip(p, r))
    a_s = -c_a * interf_s
    ineq.append(TraceConstraint(A=sdp.embed_complex(a_s) / 2,
                                b=c_a * base - sig_s - shift * c_a * base,
                                d=slack_d(0, c_a * base)))
    for k in range(len(r)):
        cross = sum(p[i] * outer(r[i]) for i in range(len(r)) if i != k)
        a_k = p[k] * outer(r[k]) - d_a * cross
        ineq.append(TraceConstraint(A=sdp.embed_complex(a_k) / 2,
                                    b=d_a * base - shift * d_a * base,
                                    d=slack_d(k + 1, d_a * base)))

    eq = []
    for i in range(m):
        e = np.zeros((m, m), dtype=complex)
        e[i, i] = 1.0
        eq.append(TraceConstraint(A=sdp.embed_complex(e) / 2, b=1.0))

    return SdpProblem(dim=2 * m, sense="max", c_scalars=c_scalars,
                      n_scalars=n_scalars, eq=eq, ineq=ineq)


class _PhaseMargins:
    """Worst-case rate margin as a function of the lifted phase vector u.

    The margins depend on u only through the K cascade scalars
    s_k = u^H r_k, which makes candidate scoring and per-element
    coordinate updates O(K) instead of a full channel re-evaluation.
    """

    def __init__(self, alpha, f, channels, budget):
        hf = channels.h_ap_ris @ f
        self.r = np.array([np.conj(hf) * h for h in channels.h_ris_k])
        self.p = np.broadcast_to(budget.p_k, (len(self.r),)).astype(float)
        echo = _echo_matrix(alpha, channels, budget)
        self.base = float(np.real(np.vdot(f, echo @ f))) \
            + (1.0 - alpha) * budget.sigma2
        self.sig_s = budget.p_s * abs(np.vdot(f, channels.h_ap_s)) ** 2
        self.alpha = alpha
        self.budget = budget
        self.coherent = budget.coherent_interference
        self.p_common = budget.p_k_common()

    def cascades(self, u: np.ndarray) -> np.ndarray:
        return self.r @ u.conj()

    def from_cascades(self, s: np.ndarray) -> float:
        b = self.budget
        powers = self.p * np.abs(s) ** 2
        if self.coherent:
            interf_s = self.p_common * abs(s.sum()) ** 2
        else:
            interf_s = powers.sum()
        gamma_s = self.sig_s / (interf_s + self.base)
        worst = rate(self.alpha, b.bandwidth, gamma_s) / b.rate_s_th - 1.0
        total = powers.sum()
        for k in range(len(s)):
            gamma_k = powers[k] / (total - powers[k] + self.base)
            mk = rate(self.alpha, b.bandwidth, gamma_k) / b.rate_k_th - 1.0
            worst = min(worst, mk)
        return float(worst)

    def __call__(self, u: np.ndarray) -> float:
        return self.from_cascades(self.cascades(u))


_REFINE_GRID = np.exp(2j * np.pi * np.arange(1, 32) / 32)


def _refine_phase_vector(u: np.ndarray, margins: _PhaseMargins,
                         passes: int = 6) -> np.ndarray:
    """Coordinate ascent over per-element angles on the worst-case margin."""
    u = u.copy()
    s = margins.cascades(u)
    best = margins.from_cascades(s)
    for _ in range(passes):
        improved = False
        for i in range(u.size):
            col = margins.r[:, i] * np.conj(u[i])
            for rot in _REFINE_GRID:
                s_try = s + col * (np.conj(rot) - 1.0)
                val = margins.from_cascades(s_try)
                if val > best:
                    best, improved = val, True
                    s = s_try
                    u[i] = u[i] * rot
                    col = margins.r[:, i] * np.conj(u[i])
        if not improved:
            break
    return u


def _mixture_candidates(margins: _PhaseMargins) -> list:
    """Matched-filter phase profiles for weighted device combinations."""
    r = margins.r
    norms = np.linalg.norm(r, axis=1)
    norms[norms == 0] = 1.0
    k = len(r)
    out = []
    weights = [np.eye(k)[i] for i in range(k)] + [np.ones(k)]
    grid = np.linspace(0.2, 1.0, 5)
    if k == 3:
        weights += [np.array([a, b, 1.0]) for a in grid for b in grid]
    for w in weights:
        combo = (w / norms) @ r
        out.append(np.exp(-1j * np.angle(combo)).conj())
    return out


def solve_phase(alpha: float, f: np.ndarray, channels: ChannelSet,
                budget: LinkBudget, settings: AoSettings,
                rng: np.random.Generator, mode: str = "slack") -> RisPhase | None:
    """RIS phases maximizing worst-case rate margin at fixed beam and split.

    Combines the SDR solution (when it solves) with matched-filter
    candidates, then refines the best candidates by coordinate ascent.
    """
    margins = _PhaseMargins(alpha, f, channels, budget)
    candidates = list(_mixture_candidates(margins))

    prob = build_ris_sdr(alpha, f, channels, budget, mode=mode)
    sol = sdp.solve(prob, tol=settings.sdr_tol)
    if sol.status is SdpStatus.OPTIMAL:
        u_mat = sdp.de_embed(sol.X)
        recovered = _recover_best(u_mat, "unit_modulus", margins, rng,
                                  settings.randomization_samples)
        if recovered is not None:
            candidates.append(recovered)

    if not candidates:
        return None
    candidates.sort(key=margins, reverse=True)
    best = max((_refine_phase_vector(u, margins) for u in candidates[:3]),
               key=margins)
    return RisPhase(np.conj(best))


def _sensing_beam(channels: ChannelSet) -> np.ndarray:
    a = channels.a_ap_s
    return a / np.linalg.norm(a)


def evaluate(variables: DesignVariables, channels: ChannelSet,
             budget: LinkBudget):
    """CRB and achieved rates of a design point."""
    alpha, f, phase = variables.alpha, variables.f, variables.phase
    crb_val = crb(alpha, f, channels, budget)
    if alpha >= 1.0:
        rate_s_val, rates_k = 0.0, np.zeros(channels.n_devices)
    else:
        b = budget.bandwidth
        rate_s_val = rate(alpha, b, sinr_s(alpha, f, channels, phase, budget))
        rates_k = np.array([
            rate(alpha, b, sinr_k(k, alpha, f, channels, phase, budget))
            for k in range(channels.n_devices)
        ])
    return crb_val, rate_s_val, rates_k


def run_ao(channels: ChannelSet, budget: LinkBudget, scheme: Scheme,
           rng: np.random.Generator,
           settings: AoSettings | None = None) -> AoResult:
    """Run the alternating optimization (or a baseline) to convergence."""
    if settings is None:
        settings = AoSettings()
    t0 = time.perf_counter()
    trace = AoTrace()

    f = _sensing_beam(channels)
    phase = RisPhase.random(channels.m_ris, rng)

    if scheme is Scheme.FULL_SO:
        # sensing-only: no rate constraints, closed-form beam, alpha pinned
        variables = DesignVariables(f=f, alpha=1.0, phase=phase)
        crb_val, rate_s_val, rates_k = evaluate(variables, channels, budget)
        trace.crb_values.append(crb_val)
        trace.alpha_values.append(1.0)
        trace.feasible_flags.append(True)
        trace.converged = True
        return AoResult(variables=variables, crb_s2=crb_val, rate_s=rate_s_val,
                        rates_k=rates_k, feasible=True, trace=trace,
                        scheme=scheme, wall_seconds=time.perf_counter() - t0)

    fixed_alpha = FIXED_ALPHA.get(scheme)
    tune_phase = scheme in (Scheme.PROPOSED, Scheme.FULL_ISAC, Scheme.EQUAL_SPLIT)

    def pick_alpha(f_cur, phase_cur):
        if fixed_alpha is not None:
            return fixed_alpha, is_feasible(fixed_alpha, f_cur, channels, phase_cur, budget)
        try:
            return solve_alpha(f_cur, channels, phase_cur, budget, settings), True
        except EmptyFeasibleSet:
            return least_violation_alpha(f_cur, channels, phase_cur, budget, settings), False

    # restore feasibility from the random initial phases before iterating
    if tune_phase:
        alpha0, _ = pick_alpha(f, phase)
        restored = solve_phase(alpha0, f, channels, budget, settings, rng,
                               mode="restore")
        if restored is not None:
            old = rate_margins(alpha0, f, channels, phase, budget).min()
            new = rate_margins(alpha0, f, channels, restored, budget).min()
            if new > old:
                phase = restored

    alpha, feasible = pick_alpha(f, phase)
    prev_crb = crb(alpha, f, channels, budget)
    prev_margin = None
    variables = DesignVariables(f=f, alpha=alpha, phase=phase)

    for _ in range(settings.max_iter):
        # beamforming step; when infeasible it targets margins, not gain
        beam_mode = "gain" if feasible else "restore"
        f_new = solve_receive(alpha, channels, phase, budget, settings, rng,
                              mode=beam_mode)
        if f_new is not None:
            if beam_mode == "restore":
                old = rate_margins(alpha, f, channels, phase, budget).min()
                new = rate_margins(alpha, f_new, channels, phase, budget).min()
                accept = new > old
            else:
                old_gain = abs(np.vdot(f, channels.a_ap_s)) ** 2
                new_gain = abs(np.vdot(f_new, channels.a_ap_s)) ** 2
                accept = new_gain >= old_gain * (1.0 - 1e-12)
            if accept:
                f = f_new
            else:
                trace.events.append("beam-step-rejected")
        else:
            trace.events.append("beam-step-infeasible")

        # splitting-ratio step
        alpha, feasible = pick_alpha(f, phase)

        # phase step (improves feasibility margins only)
        if tune_phase:
            mode = "slack" if feasible else "restore"
            phase_new = solve_phase(alpha, f, channels, budget, settings, rng,
                                    mode=mode)
            if phase_new is not None:
                old = rate_margins(alpha, f, channels, phase, budget).min()
                new = rate_margins(alpha, f, channels, phase_new, budget).min()
                if new > old or new >= -FEAS_TOL:
                    phase = phase_new
                else:
                    trace.events.append("phase-step-rejected")
            else:
                trace.events.append("phase-step-failed")
            alpha, feasible = pick_alpha(f, phase)

        crb_val = crb(alpha, f, channels, budget)
        if feasible and trace.feasible_flags and trace.feasible_flags[-1] \
                and crb_val > prev_crb * (1.0 + 1e-9):
            trace.events.append("iteration-reverted")
            crb_val, alpha, f, phase = prev_crb, variables.alpha, variables.f, variables.phase
            trace.converged = True
        variables = DesignVariables(f=f, alpha=alpha, phase=phase)
        trace.crb_values.append(crb_val)
        trace.alpha_values.append(alpha)
        trace.feasible_flags.append(feasible)
        if trace.converged:
            break
        if feasible:
            if abs(prev_crb - crb_val) <= settings.tol * prev_crb:
                trace.converged = True
                break
        else:
            # still restoring feasibility: stop only when margins stall
            cur_margin = rate_margins(alpha, f, channels, phase, budget).min()
            if prev_margin is not None and cur_margin <= prev_margin + 1e-9:
                trace.converged = True
                break
            prev_margin = cur_margin
        prev_crb = crb_val

    crb_val, rate_s_val, rates_k = evaluate(variables, channels, budget)
    feasible = is_feasible(variables.alpha, variables.f, channels,
                           variables.phase, budget)
    return AoResult(variables=variables, crb_s2=crb_val, rate_s=rate_s_val,
                    rates_k=rates_k, feasible=feasible, trace=trace,
                    scheme=scheme, wall_seconds=time.perf_counter() - t0)

"""Small dense semidefinite programs in real symmetric trace form.

Problems have one n x n PSD matrix variable, optional nonnegative scalar
variables, and linear trace equality/inequality constraints.  They are
solved by a primal-dual interior-point method with Nesterov-Todd scaling
on the PSD cone and Mehrotra predictor-corrector steps; the Schur
complement is dense and tiny (one row per constraint), which keeps each
solve in the millisecond range at the array sizes used here.

Complex Hermitian data enters through the standard [[Re, -Im], [Im, Re]]
embedding (``embed_complex``), under which complex PSD-ness and traces
(up to a factor 2) are preserved.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .linalg import NonHermitian, hermitian_eig


class SdpError(RuntimeError):
    pass


class RecoveryFailed(SdpError):
    pass


class SdpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical-failure"


@dataclass(frozen=True)
class TraceConstraint:
    """tr(A X) + d . s  (=|>=)  b, with A symmetric and s the scalar block."""

    A: np.ndarray
    b: float
    d: np.ndarray | None = None


@dataclass
class SdpProblem:
    """min/max tr(C X) + c_scalars . s over X >= 0 (PSD), s >= 0."""

    dim: int
    sense: str = "min"
    C: np.ndarray | None = None
    c_scalars: np.ndarray | None = None
    eq: list = field(default_factory=list)
    ineq: list = field(default_factory=list)
    n_scalars: int = 0

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if self.C is None:
            self.C = np.zeros((self.dim, self.dim))
        self.C = _check_sym(np.asarray(self.C, dtype=float), "objective")
        if self.c_scalars is None:
            self.c_scalars = np.zeros(self.n_scalars)
        self.c_scalars = np.asarray(self.c_scalars, dtype=float).ravel()
        for con in self.eq + self.ineq:
            _check_sym(con.A, "constraint")


@dataclass(frozen=True)
class SdpResiduals:
    max_eq: float
    max_ineq_violation: float
    min_eigenvalue: float


@dataclass(frozen=True)
class SdpSolution:
    X: np.ndarray
    scalars: np.ndarray
    objective_value: float
    status: SdpStatus
    residuals: SdpResiduals
    iterations: int = 0


def _check_sym(a: np.ndarray, what: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} matrix must be square, got {a.shape}")
    scale = np.abs(a).max() or 1.0
    if np.abs(a - a.T).max() > 1e-9 * scale:
        raise ValueError(f"{what} matrix must be symmetric")
    return (a + a.T) / 2


def embed_complex(h: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix."""
    h = np.asarray(h, dtype=complex)
    scale = np.abs(h).max() or 1.0
    if np.abs(h - h.conj().T).max() > 1e-9 * scale:
        raise NonHermitian("embedding requires a Hermitian matrix")
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def de_embed(y: np.ndarray) -> np.ndarray:
    """Hermitian matrix recovered from a real embedded solution."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0] // 2
    y11, y12 = y[:n, :n], y[:n, n:]
    y21, y22 = y[n:, :n], y[n:, n:]
    h = (y11 + y22) / 2 + 1j * (y21 - y12) / 2
    return (h + h.conj().T) / 2


def _sym(m):
    return (m + m.T) / 2


def _nt_scaling(x, z):
    """NT scaling factors: R with X = R diag(lam) R^T, Z = R^-T diag(lam) R^-1.

    Computed from Cholesky factors and the SVD of L_z^T L_x; returns
    (R, R^-1, lam) with lam the scaled point (descending singular values).
    """
    jitter = 0.0
    eye = np.eye(x.shape[0])
    for _ in range(8):
        try:
            lx = np.linalg.cholesky(x + jitter * eye)
            lz = np.linalg.cholesky(z + jitter * eye)
            break
        except np.linalg.LinAlgError:
            jitter = max(jitter * 100.0, 1e-14 * (np.trace(x) + np.trace(z)))
    else:
        raise SdpError("iterate left the PSD cone")
    u, lam, vt = np.linalg.svd(lz.T @ lx)
    lam = np.maximum(lam, 1e-300)
    r = (lx @ vt.T) / np.sqrt(lam)[None, :]
    r_inv = np.sqrt(lam)[:, None] * (vt @ np.linalg.inv(lx))
    return r, r_inv, lam


def _max_step_psd(x, dx):
    """Largest step with x + a dx still PSD (capped at 1)."""
    try:
        l = np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        return 0.0
    m = np.linalg.solve(l, np.linalg.solve(l, dx).T)
    lam_min = np.linalg.eigvalsh(_sym(m)).min()
    if lam_min >= -1e-300:
        return 1.0
    return min(1.0, -1.0 / lam_min)


def _max_step_pos(u, du):
    neg = du < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-u[neg] / du[neg])))


class _StandardForm:
    """min <C,X> + q.u  s.t.  <A_i,X> + D_i.u = b,  X PSD, u >= 0."""

    def __init__(self, prob: SdpProblem):
        self.n = prob.dim
        sgn = 1.0 if prob.sense == "min" else -1.0
        self.sgn = sgn
        self.n_scalars = prob.n_scalars
        self.n_ineq = len(prob.ineq)
        self.p = prob.n_scalars + self.n_ineq
        # nondimensionalize the objective; reported values are scaled back
        self.obj_scale = max(np.abs(prob.C).max(),
                             np.abs(prob.c_scalars).max() if prob.n_scalars else 0.0,
                             1e-300)
        self.C = sgn * prob.C / self.obj_scale
        self.q = np.zeros(self.p)
        self.q[:prob.n_scalars] = sgn * prob.c_scalars / self.obj_scale

        self.A = []
        rows_d = []
        self.b = []
        for con in prob.eq:
            d = np.zeros(self.p)
            if con.d is not None:
                d[:prob.n_scalars] = np.asarray(con.d, dtype=float)
            self._add_row(con.A, d, con.b, rows_d)
        for j, con in enumerate(prob.ineq):
            d = np.zeros(self.p)
            if con.d is not None:
                d[:prob.n_scalars] = np.asarray(con.d, dtype=float)
            self._add_row(con.A, d, con.b, rows_d)
            # surplus variable lives in the row's scaled units
            rows_d[-1][prob.n_scalars + j] = -1.0
        self.m = len(self.A)
        self.D = np.array(rows_d) if self.m else np.zeros((0, self.p))
        self.b = np.array(self.b)

    def _add_row(self, a, d, b, rows_d):
        # per-row nondimensionalization: powers span many orders of magnitude
        scale = max(np.abs(a).max(), np.abs(d).max() if d.size else 0.0,
                    abs(b), 1e-300)
        self.A.append(a / scale)
        rows_d.append(d / scale)
        self.b.append(b / scale)

    def apply(self, x, u):
        vals = np.array([np.sum(a * x) for a in self.A])
        if self.p:
            vals = vals + self.D @ u
        return vals

    def adjoint(self, y):
        out = np.zeros((self.n, self.n))
        for yi, a in zip(y, self.A):
            out += yi * a
        return out


def solve(prob: SdpProblem, tol: float = 1e-9, max_iter: int = 200,
          verbose: bool = False) -> SdpSolution:
    """Solve the program; OPTIMAL solutions meet the residual contracts."""
    sf = _StandardForm(prob)
    n, p, m = sf.n, sf.p, sf.m
    if m == 0:
        raise ValueError("problem must have at least one constraint")

    data_scale = max(1.0, np.abs(sf.b).max(), np.abs(sf.C).max(),
                     np.abs(sf.q).max() if p else 0.0)
    x = np.eye(n) * data_scale
    z = np.eye(n) * data_scale
    u = np.full(p, data_scale)
    w = np.full(p, data_scale)
    y = np.zeros(m)

    b_norm = 1.0 + np.abs(sf.b).max()
    c_norm = 1.0 + np.abs(sf.C).max() + (np.abs(sf.q).max() if p else 0.0)

    best_pres = np.inf
    status = SdpStatus.NUMERICAL_FAILURE
    it = 0
    for it in range(1, max_iter + 1):
        rp = sf.b - sf.apply(x, u)
        rd = sf.C - sf.adjoint(y) - z
        rdu = sf.q - (sf.D.T @ y) - w if p else np.zeros(0)
        gap = float(np.sum(x * z) + (u @ w if p else 0.0))
        mu = gap / (n + p)

        pobj = float(np.sum(sf.C * x) + (sf.q @ u if p else 0.0))
        dobj = float(sf.b @ y)
        pres = np.abs(rp).max() / b_norm
        dres = max(np.abs(rd).max(), np.abs(rdu).max() if p else 0.0) / c_norm
        relgap = gap / (1.0 + abs(pobj) + abs(dobj))
        best_pres = min(best_pres, pres)

        if verbose:
            print(f"iter {it:3d} pres {pres:.2e} dres {dres:.2e} gap {relgap:.2e} mu {mu:.2e}")
        if pres <= tol and dres <= tol and relgap <= max(tol, 1e-10):
            status = SdpStatus.OPTIMAL
            break

        # primal infeasibility certificate: y with b.y > 0 and A*(y) <= 0
        by = dobj
        if by > 0:
            cert = (np.linalg.norm(sf.C - rd) + (np.linalg.norm(sf.q - rdu) if p else 0.0)) / by
            if cert < 1e-8:
                status = SdpStatus.INFEASIBLE
                break

        r_mat, r_inv, lam = _nt_scaling(x, z)
        wmat = _sym(r_mat @ r_mat.T)
        uw = u / w if p else np.zeros(0)

        waw = [_sym(wmat @ a @ wmat) for a in sf.A]
        schur = np.array([[np.sum(ai * wj) for wj in waw] for ai in sf.A])
        if p:
            schur += (sf.D * uw) @ sf.D.T
        schur = _sym(schur)
        jitter = 1e-13 * (1.0 + np.abs(schur).max())
        try:
            chol = np.linalg.cholesky(schur + jitter * np.eye(m))
        except np.linalg.LinAlgError:
            chol = np.linalg.cholesky(schur + 1e-7 * (1.0 + np.abs(schur).max()) * np.eye(m))

        w_rd_w = _sym(wmat @ rd @ wmat)

        def directions(k_mat, k_u):
            rhs = rp - np.array([np.sum(a * (k_mat - w_rd_w)) for a in sf.A])
            if p:
                rhs = rhs - sf.D @ (k_u - uw * rdu)
            dy = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
            for _ in range(2):  # refinement against the unjittered Schur matrix
                resid = rhs - schur @ dy
                dy = dy + np.linalg.solve(chol.T, np.linalg.solve(chol, resid))
            dz = rd - sf.adjoint(dy)
            dx = _sym(k_mat - _sym(wmat @ dz @ wmat))
            if p:
                dw = rdu - sf.D.T @ dy
                du = k_u - uw * dw
            else:
                dw = du = np.zeros(0)
            return dx, du, dy, dz, dw

        # predictor
        dx_a, du_a, dy_a, dz_a, dw_a = directions(-x, -u)
        ap = min(_max_step_psd(x, dx_a), _max_step_pos(u, du_a) if p else 1.0)
        ad = min(_max_step_psd(z, dz_a), _max_step_pos(w, dw_a) if p else 1.0)
        gap_aff = float(np.sum((x + ap * dx_a) * (z + ad * dz_a)))
        if p:
            gap_aff += float((u + ap * du_a) @ (w + ad * dw_a))
        sigma = min(1.0, max(1e-8, (max(gap_aff, 0.0) / gap) ** 3))

        # corrector, assembled in the NT-scaled space where the point is diag(lam)
        dxt = r_inv @ dx_a @ r_inv.T
        dzt = r_mat.T @ dz_a @ r_mat
        rc = sigma * mu * np.eye(n) - np.diag(lam ** 2) - _sym(dxt @ dzt)
        k_mat = _sym(r_mat @ (2.0 * rc / np.add.outer(lam, lam)) @ r_mat.T)
        k_u = sigma * mu / w - u - du_a * dw_a / w if p else np.zeros(0)
        dx, du, dy, dz, dw = directions(k_mat, k_u)

        ap = min(_max_step_psd(x, dx), _max_step_pos(u, du) if p else 1.0)
        ad = min(_max_step_psd(z, dz), _max_step_pos(w, dw) if p else 1.0)
        frac = 0.9 + 0.09 * min(ap, ad)
        ap *= frac
        ad *= frac

        if verbose:
            print(f"        ap {ap:.3f} ad {ad:.3f} sigma {sigma:.2e}")
        x = _sym(x + ap * dx)
        u = u + ap * du
        y = y + ad * dy
        z = _sym(z + ad * dz)
        w = w + ad * dw

    scalars = (u[:sf.n_scalars] if p else np.zeros(0)).copy()
    objective = float(sf.sgn * sf.obj_scale
                      * (np.sum(sf.C * x) + (sf.q @ u if p else 0.0)))
    residuals = _public_residuals(prob, x, scalars)
    return SdpSolution(X=x, scalars=scalars, objective_value=objective,
                       status=status, residuals=residuals, iterations=it)


def _public_residuals(prob: SdpProblem, x, scalars) -> SdpResiduals:
    def lhs(con):
        val = float(np.sum(con.A * x))
        if con.d is not None and len(scalars):
            val += float(np.asarray(con.d) @ scalars)
        return val

    max_eq = max((abs(lhs(c) - c.b) / (1.0 + abs(c.b)) for c in prob.eq), default=0.0)
    max_ineq = max((max(0.0, c.b - lhs(c)) / (1.0 + abs(c.b)) for c in prob.ineq), default=0.0)
    min_eig = float(np.linalg.eigvalsh(_sym(x)).min()) if prob.dim else 0.0
    return SdpResiduals(max_eq=max_eq, max_ineq_violation=max_ineq, min_eigenvalue=min_eig)


class RecoveryMode(enum.Enum):
    EIGEN = "eigen"
    RANDOMIZE = "randomize"


def _project(x: np.ndarray, constraint: str) -> np.ndarray:
    if constraint == "unit_norm":
        nrm = np.linalg.norm(x)
        if nrm == 0:
            raise RecoveryFailed("cannot normalize a zero vector")
        return x / nrm
    if constraint == "unit_modulus":
        out = np.exp(1j * np.angle(x))
        out[x == 0] = 1.0
        return out
    raise ValueError(f"unknown structural constraint {constraint!r}")


def rank_one_recover(x_mat: np.ndarray, constraint: str,
                     mode: RecoveryMode = RecoveryMode.EIGEN,
                     feasibility_check=None, objective=None,
                     rng: np.random.Generator | None = None,
                     n_samples: int = 200,
                     eigen_threshold: float = 0.99) -> np.ndarray:
    """Extract a feasible vector from an SDR solution matrix.

    Eigen mode returns the dominant-eigenpair vector when it carries at
    least ``eigen_threshold`` of the eigenvalue mass, falling through to
    Gaussian randomization otherwise.  Candidates are projected onto the
    structural constraint (unit norm or entrywise unit modulus) before
    the feasibility callback sees them.
    """
    x_mat = np.asarray(x_mat, dtype=complex)
    eig = hermitian_eig(x_mat, rtol=1e-6)
    lam = np.maximum(eig.eigenvalues, 0.0)
    total = lam.sum()
    if total <= 0:
        raise RecoveryFailed("SDR matrix has no positive eigenvalue mass")

    if objective is None:
        def objective(v):
            return float(np.real(v.conj() @ x_mat @ v))

    if mode is RecoveryMode.EIGEN and lam[0] / total >= eigen_threshold:
        cand = _project(np.sqrt(lam[0]) * eig.eigenvectors[:, 0], constraint)
        if feasibility_check is None or feasibility_check(cand):
            return cand

    if rng is None:
        rng = np.random.default_rng(0)
    half = eig.eigenvectors * np.sqrt(lam)[None, :]
    n = x_mat.shape[0]
    best, best_val = None, -np.inf
    for _ in range(n_samples):
        g = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
        cand = _project(half @ g, constraint)
        if feasibility_check is not None and not feasibility_check(cand):
            continue
        val = objective(cand)
        if val > best_val:
            best, best_val = cand, val
    if best is None:
        raise RecoveryFailed("no randomized candidate passed the feasibility check")
    return best

"""Greedy low-rank matrix completion with alternating ridge refinement.

The solver minimizes

    phi(X) = 0.5 * ||P_Omega(X - H_obs)||_F^2 + mu * ||X||_*

by generalized conditional gradient: each outer iteration adds the top
singular pair of the negated masked residual as a rank-one atom, takes a
clamped analytic line-search step, then locally refines both factors with
per-column / per-row ridge solves.  Factor width grows by exactly one per
outer iteration, so the final width doubles as the rank estimate.

Stopping: relative change of the estimate's squared norm at most
``eps_outer`` (checked from the second iteration), or masked residual
energy at or below the noise floor (N + sqrt(8N)) * sigma^2, or the
``max_rank`` cap (flagged as truncation).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import flops as flop_model
from .exceptions import ConfigError, EstimatorError
from .training import ObservationMatrix
from .validation import check_complex_matrix, check_in_range, check_mask, check_rng


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of the completion solver.

    ``noise_var`` is the per-sample complex noise variance; ``mu`` defaults
    to it (pass a small positive surrogate such as 1e-8 for noiseless data).
    ``eps_inner`` is the relative-decrease threshold of the refinement loop;
    tighten it (e.g. 1e-6) when driving noiseless problems to the floor.
    """

    noise_var: float
    mu: float | None = None
    eps_outer: float = 0.01
    eps_inner: float = 0.1
    max_rank: int | None = None
    max_inner: int = 100
    power_iters: int = 2
    oversample: int = 10
    refine_tol: float = 1e-11
    max_refine: int = 5000
    seed: int | None = None

    def __post_init__(self):
        check_in_range(self.noise_var, "noise_var", low=0)
        if self.mu is not None:
            check_in_range(self.mu, "mu", low=0)
        check_in_range(self.eps_outer, "eps_outer", low=0, low_open=True)
        check_in_range(self.eps_inner, "eps_inner", low=0)
        if self.max_inner < 1:
            raise ConfigError("max_inner must be >= 1")
        if self.power_iters < 0:
            raise ConfigError("power_iters must be >= 0")
        if self.oversample < 0:
            raise ConfigError("oversample must be >= 0")

    @property
    def effective_mu(self) -> float:
        return self.noise_var if self.mu is None else self.mu


@dataclass
class TraceRow:
    k: int
    theta: float
    eta: float
    objective: float
    eps_k: float
    delta_sq: float
    inner_iters: int
    flops_cumulative: float


@dataclass
class FactorEstimate:
    """Solver output: factors, diagnostics, and the per-iteration trace."""

    U: np.ndarray
    V: np.ndarray
    rank: int
    converged: str                 # "noise_floor" | "energy_plateau" | "exact"
    truncated: bool                # stopped only by the max_rank cap
    trace: list = field(default_factory=list)
    inner_objectives: list = field(default_factory=list)
    flops: float = 0.0

    @property
    def matrix(self) -> np.ndarray:
        return self.U @ self.V.conj().T

    def trace_csv(self) -> str:
        buf = io.StringIO()
        buf.write("k,theta_k,eta_k,objective,eps_k,delta_sq,"
                  "inner_iters,flops_cumulative\n")
        for row in self.trace:
            buf.write(f"{row.k},{row.theta!r},{row.eta!r},{row.objective!r},"
                      f"{row.eps_k!r},{row.delta_sq!r},{row.inner_iters},"
                      f"{row.flops_cumulative!r}\n")
        return buf.getvalue()


def top_singular_pair(M, power_iters: int = 2, oversample: int = 10,
                      rng=None, refine_tol: float = 1e-11,
                      max_refine: int = 5000):
    """Leading singular triple (u, sigma, v) of M.

    A randomized sketch (Gaussian test matrix, ``power_iters`` power passes,
    ``oversample`` extra columns) provides the starting pair, which is then
    polished by deterministic alternating matrix-vector products until the
    singular-value iterate is stable to ``refine_tol`` relative.  Small
    matrices (min dimension <= 2*(oversample+1)) go straight to a dense SVD
    before the same polish.
    """
    M = np.ascontiguousarray(M)
    m, n = M.shape
    if min(m, n) <= 2 * (oversample + 1):
        Uf, s, Vh = np.linalg.svd(M, full_matrices=False)
        u, sigma, v = Uf[:, 0], float(s[0]), Vh[0].conj()
    else:
        rng = check_rng(rng)
        k = oversample + 1
        test = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
        Y = M @ test
        for _ in range(power_iters):
            Q, _ = np.linalg.qr(Y)
            Y = M @ (M.conj().T @ Q)
        Q, _ = np.linalg.qr(Y)
        Ub, s, Vh = np.linalg.svd(Q.conj().T @ M, full_matrices=False)
        u, sigma, v = Q @ Ub[:, 0], float(s[0]), Vh[0].conj()
    if sigma == 0.0:
        return u, 0.0, v
    for _ in range(max_refine):
        u_new = M @ v
        nu = np.linalg.norm(u_new)
        if nu == 0.0:
            break
        u_new /= nu
        v_new = M.conj().T @ u_new
        sigma_new = np.linalg.norm(v_new)
        if sigma_new == 0.0:
            break
        v_new /= sigma_new
        drift = abs(sigma_new - sigma)
        u, v, sigma = u_new, v_new, float(sigma_new)
        if drift <= refine_tol * sigma:
            break
    return u, sigma, v


def descent_atom(observed, mask, U, V, config: SolverConfig | None = None,
                 rng=None):
    """Top singular pair of the negated masked residual P_Omega(UV^H - H_obs).

    Returns (u, sigma, v, residual); ``sigma == 0`` signals an exactly fitted
    observation set.
    """
    cfg = config or SolverConfig(noise_var=0.0)
    residual = np.where(mask, U @ V.conj().T - observed, 0.0)
    if not np.any(residual):
        z = np.zeros(observed.shape[0], complex)
        return z, 0.0, np.zeros(observed.shape[1], complex), residual
    u, sigma, v = top_singular_pair(-residual, cfg.power_iters, cfg.oversample,
                                    rng=rng, refine_tol=cfg.refine_tol,
                                    max_refine=cfg.max_refine)
    return u, sigma, v, residual


def line_search_theta(observed, mask, U, V, u, v, eta: float, mu: float) -> float:
    """Exact minimizer of the quadratic upper model in the atom weight.

    With z = P_Omega(u v^H), the unconstrained minimizer of

        h(theta) = 0.5*||(1-eta)*P_Omega(UV^H) + theta*z - P_Omega(H_obs)||^2
                   + mu*(1-eta)*||UV^H||_* + mu*theta

    is [Re<z, H_obs> - (1-eta)*Re<z, UV^H> - mu] / ||z||^2 (inner products
    over the sampled set); the returned value is clamped at zero.
    """
    z = np.where(mask, np.outer(u, v.conj()), 0.0)
    zz = float(np.sum(np.abs(z) ** 2))
    if zz == 0.0:
        return 0.0
    obs_corr = float(np.real(np.vdot(z, np.where(mask, observed, 0.0))))
    cur_corr = float(np.real(np.vdot(z, np.where(mask, U @ V.conj().T, 0.0))))
    theta = (obs_corr - (1.0 - eta) * cur_corr - mu) / zz
    return max(theta, 0.0)


class _MaskIndex:
    """Precomputed index structure for the batched ridge updates."""

    def __init__(self, observed, mask):
        n_r, n_t = observed.shape
        counts = mask.sum(axis=0)
        self.uniform_cols = counts.min() == counts.max()
        width = int(counts.max())
        self.col_rows = np.zeros((n_t, width), int)
        self.col_w = np.zeros((n_t, width))
        for t in range(n_t):
            r = np.flatnonzero(mask[:, t])
            self.col_rows[t, :len(r)] = r
            self.col_w[t, :len(r)] = 1.0
        self.col_vals = observed[self.col_rows, np.arange(n_t)[:, None]] * self.col_w

        width_r = int(mask.sum(axis=1).max())
        self.row_cols = np.zeros((n_r, width_r), int)
        self.row_w = np.zeros((n_r, width_r))
        for r in range(n_r):
            c = np.flatnonzero(mask[r])
            self.row_cols[r, :len(c)] = c
            self.row_w[r, :len(c)] = 1.0
        self.row_vals = observed[np.arange(n_r)[:, None], self.row_cols] * self.row_w


def _masked_objective(index: _MaskIndex, U, V, mu: float) -> float:
    est = np.take_along_axis(U @ V.conj().T, index.col_rows.T, axis=0).T
    res = (est * index.col_w - index.col_vals)
    fit = 0.5 * float(np.sum(np.abs(res) ** 2))
    return fit + 0.5 * mu * float(np.sum(np.abs(U) ** 2) + np.sum(np.abs(V) ** 2))


def _altmin(index: _MaskIndex, U, V, mu: float, eps_inner: float,
            max_inner: int):
    k = U.shape[1]
    eye = mu * np.eye(k)
    objectives = [_masked_objective(index, U, V, mu)]
    prev = objectives[0]
    iters = 0
    for iters in range(1, max_inner + 1):
        Us = U[index.col_rows] * index.col_w[..., None]
        gram = np.einsum("tpi,tpj->tij", Us.conj(), Us) + eye
        rhs = np.einsum("tpi,tp->ti", Us.conj(), index.col_vals)
        try:
            V = np.linalg.solve(gram, rhs[..., None])[..., 0].conj()
        except np.linalg.LinAlgError as exc:
            raise EstimatorError(
                "column ridge solve failed; use a positive mu") from exc
        objectives.append(_masked_objective(index, U, V, mu))

        Vs = (V[index.row_cols] * index.row_w[..., None]).conj()
        gram = np.einsum("rpi,rpj->rij", Vs.conj(), Vs) + eye
        rhs = np.einsum("rpi,rp->ri", Vs.conj(), index.row_vals)
        try:
            U = np.linalg.solve(gram, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise EstimatorError(
                "row ridge solve failed; use a positive mu") from exc
        current = _masked_objective(index, U, V, mu)
        objectives.append(current)

        decrease = (prev - current) / prev if prev > 0 else 0.0
        prev = current
        if decrease <= eps_inner:
            break
    return U, V, iters, objectives


def altmin_refine(observed, mask, U, V, mu: float, eps_inner: float = 0.1,
                  max_inner: int = 100):
    """Alternate exact per-column and per-row ridge solves on the factors.

    The column update solves, for every sampled column t,
    (U_t^H U_t + mu I) w = U_t^H h_t with U_t the rows of U sampled in that
    column; the row update is symmetric.  Each half-step is an exact
    minimizer, so the regularized objective never increases.  Returns
    (U, V, iterations, objective values after every half-step).
    """
    observed = check_complex_matrix(observed, "observed")
    mask = check_mask(mask, observed.shape)
    return _altmin(_MaskIndex(observed, mask), U, V, mu, eps_inner, max_inner)


def _as_observation(obs):
    if isinstance(obs, ObservationMatrix):
        return obs.matrix, obs.mask
    if isinstance(obs, tuple) and len(obs) == 2:
        return obs
    raise ConfigError("obs must be an ObservationMatrix or (matrix, mask)")


def estimate(obs, config: SolverConfig) -> FactorEstimate:
    """Run the full greedy-plus-refinement solver on sampled observations."""
    observed, mask = _as_observation(obs)
    observed = check_complex_matrix(observed, "observed")
    mask = check_mask(mask, observed.shape)
    n_r, n_t = observed.shape
    mu = config.effective_mu
    max_rank = config.max_rank or max(min(n_r, n_t) // 2, 1)
    num_samples = int(mask.sum())
    density = num_samples / observed.size
    floor = (num_samples + np.sqrt(8.0 * num_samples)) * config.noise_var
    rng = check_rng(config.seed)
    index = _MaskIndex(observed, mask)

    U = np.zeros((n_r, 0), complex)
    V = np.zeros((n_t, 0), complex)
    est = FactorEstimate(U=U, V=V, rank=0, converged="", truncated=False)
    gcg_iter_cost = 8.0 * flop_model.sketch_factor(
        density, config.power_iters, config.oversample) * n_t * n_r
    prev_energy = 0.0
    k = 0
    while True:
        u, sigma, v, _ = descent_atom(observed, mask, U, V, config, rng=rng)
        if sigma == 0.0:
            est.converged = "exact"
            break
        eta = 2.0 / (k + 2.0)
        theta = line_search_theta(observed, mask, U, V, u, v, eta, mu)
        if theta <= 0.0:
            est.converged = "no_descent"
            break
        k += 1
        U = np.concatenate([np.sqrt(1.0 - eta) * U,
                            np.sqrt(theta) * u[:, None]], axis=1)
        V = np.concatenate([np.sqrt(1.0 - eta) * V,
                            np.sqrt(theta) * v[:, None]], axis=1)
        U, V, inner, objectives = _altmin(index, U, V, mu,
                                          config.eps_inner, config.max_inner)
        est.inner_objectives.append(objectives)

        current = U @ V.conj().T
        delta_sq = float(np.sum(np.abs(np.where(mask, current - observed, 0.0)) ** 2))
        energy = float(np.sum(np.abs(current) ** 2))
        eps_k = ((energy - prev_energy) / prev_energy
                 if k >= 2 and prev_energy > 0 else np.inf)
        prev_energy = energy

        est.flops += gcg_iter_cost + inner * flop_model.altmin_iter_flops(
            n_t, n_r, density, k)
        est.trace.append(TraceRow(
            k=k, theta=float(theta), eta=float(eta),
            objective=float(objectives[-1]), eps_k=float(eps_k),
            delta_sq=delta_sq, inner_iters=inner,
            flops_cumulative=est.flops))

        if delta_sq <= floor:
            est.converged = "noise_floor"
            break
        if k >= 2 and abs(eps_k) <= config.eps_outer:
            est.converged = "energy_plateau"
            break
        if k >= max_rank:
            est.converged = "max_rank"
            est.truncated = True
            break
    est.U, est.V, est.rank = U, V, k
    return est


class GCGAltEstimator:
    """Matrix-completion estimator with a scikit-learn style interface.

    Hyperparameters mirror ``SolverConfig``; ``fit`` takes the observed
    matrix (NaN marking unsampled entries, or an explicit boolean mask) and
    exposes ``U_``, ``V_``, ``rank_``, ``estimate_``.  ``predict``/``transform``
    return the completed low-rank matrix.
    """

    def __init__(self, noise_var=0.0, mu=None, eps_outer=0.01, eps_inner=0.1,
                 max_rank=None, max_inner=100, power_iters=2, oversample=10,
                 seed=None):
        self.noise_var = noise_var
        self.mu = mu
        self.eps_outer = eps_outer
        self.eps_inner = eps_inner
        self.max_rank = max_rank
        self.max_inner = max_inner
        self.power_iters = power_iters
        self.oversample = oversample
        self.seed = seed

    _param_names = ("noise_var", "mu", "eps_outer", "eps_inner", "max_rank",
                    "max_inner", "power_iters", "oversample", "seed")

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names}

    def set_params(self, **params):
        for name, value in params.items():
            if name not in self._param_names:
                raise ConfigError(f"unknown parameter {name!r}")
            setattr(self, name, value)
        return self

    def _config(self) -> SolverConfig:
        return SolverConfig(noise_var=self.noise_var, mu=self.mu,
                            eps_outer=self.eps_outer, eps_inner=self.eps_inner,
                            max_rank=self.max_rank, max_inner=self.max_inner,
                            power_iters=self.power_iters,
                            oversample=self.oversample, seed=self.seed)

    def fit(self, X, mask=None):
        X = np.asarray(X)
        if mask is None:
            mask = ~np.isnan(X.real) & ~np.isnan(X.imag) if np.iscomplexobj(X) \
                else ~np.isnan(X)
            X = np.where(mask, X, 0.0)
        result = estimate((np.asarray(X, complex), np.asarray(mask, bool)),
                          self._config())
        self.U_ = result.U
        self.V_ = result.V
        self.rank_ = result.rank
        self.estimate_ = result
        return self

    def _check_fitted(self):
        if not hasattr(self, "estimate_"):
            raise EstimatorError("estimator is not fitted yet; call fit first")

    def predict(self, X=None):
        self._check_fitted()
        return self.U_ @ self.V_.conj().T

    def transform(self, X=None):
        return self.predict(X)

    def fit_transform(self, X, mask=None):
        return self.fit(X, mask).predict()

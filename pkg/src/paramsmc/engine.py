"""Inference algorithms over DynamicModel instances.

Four algorithms share one vectorized driver where possible:

* the joint filter: a particle filter over states whose per-particle
  parameter posteriors are maintained by assumed-density projection
  updates (algorithm id "api"),
* the bootstrap particle filter with parameters frozen at their prior
  draws (id "pf"),
* the Liu-West filter, which kernel-perturbs parameter particles with
  shrinkage (id "liu-west"),
* particle-marginal Metropolis-Hastings over the parameters (id "pmmh").

Every step resamples with multinomial resampling.  By default the joint
filter resamples *before* the projection update and performs the update
once per distinct surviving ancestor; the literal update-then-resample
order is available behind ``update_order="update_first"`` so the two can
be compared.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import truncnorm

from . import rng as streams
from .approx import (
    MomentScheme,
    batch_discrete_match,
    batch_gaussian_points,
    batch_mixture_match,
    batch_moment_match,
    enumerate_codes,
    sample_codes,
)
from .errors import ConfigError, UnsupportedParameterKindError
from .model import DynamicModel
from .oracles import pf_log_likelihood
from .resampling import (
    distinct_sorted,
    log_mean_exp,
    normalize_log_weights,
)
from .results import (
    FusedPosterior,
    RunResult,
    fuse_discrete_points,
    fuse_gaussians,
    fuse_points,
    fuse_tables,
)
from .rng import substream
from .storage import ParticleStore, alloc, payload_allocations


@dataclass
class FilterConfig:
    """Knobs shared by the sequential filters.

    family "auto" resolves to a Gaussian approximation for continuous
    parameters and factorized tables for discrete ones; "mixture"
    requests mixture_size Gaussian components per particle.
    permute_hook = (step, permutation) relabels the particles right
    before that step runs; exchangeability checks use it.
    """

    n_particles: int
    scheme: MomentScheme = field(default_factory=MomentScheme)
    family: str = "auto"
    mixture_size: int = 10
    seed: int = 0
    resample: str = "multinomial"
    update_order: str = "resample_first"
    shrinkage: float = 0.98
    permute_hook: tuple[int, np.ndarray] | None = None

    def resolved_family(self, model: DynamicModel) -> str:
        if self.family == "auto":
            return "discrete" if model.param_kind == "discrete" else "gaussian"
        return self.family

    def validate(self, model: DynamicModel) -> None:
        if self.n_particles < 1:
            raise ConfigError("need at least one particle")
        if self.resample not in ("multinomial", "systematic"):
            raise ConfigError(f"unknown resampler {self.resample!r}")
        if self.update_order not in ("resample_first", "update_first"):
            raise ConfigError(f"unknown update order {self.update_order!r}")
        family = self.resolved_family(model)
        if family not in ("gaussian", "mixture", "discrete"):
            raise ConfigError(f"unknown approximation family {family!r}")
        if family == "discrete" and model.param_kind != "discrete":
            raise ConfigError("discrete approximation needs discrete parameters")
        if family in ("gaussian", "mixture") and model.param_kind != "continuous":
            raise ConfigError(f"{family} approximation needs continuous parameters")


def resolve_scheme(scheme: MomentScheme, p: int) -> tuple[MomentScheme, str | None]:
    """Swap in a feasible scheme when the tensor grid would blow up."""
    if scheme.kind == "gauss_hermite":
        if p > 4 or scheme.m**p > scheme.point_budget:
            return replace(scheme, kind="unscented"), (
                f"gauss_hermite infeasible at p={p}; fell back to unscented"
            )
    return scheme, None


def _resample_probs(w: np.ndarray, rng: np.random.Generator, kind: str) -> np.ndarray:
    n = w.shape[0]
    if kind == "systematic":
        positions = (np.arange(n) + rng.random()) / n
        return np.searchsorted(np.cumsum(w), positions).clip(max=n - 1)
    counts = rng.multinomial(n, w)
    return np.repeat(np.arange(n), counts)


# ---------------------------------------------------------------------------
# Per-particle approximation clouds: stacked arrays plus double buffers so
# the steady state never allocates payload memory.
# ---------------------------------------------------------------------------


class _GaussianCloud:
    kind = "gaussian"

    def __init__(self, n: int, prior_mean: np.ndarray, prior_cov: np.ndarray):
        p = prior_mean.shape[0]
        self.n, self.p = n, p
        self.means = alloc((n, p))
        self.covs = alloc((n, p, p))
        self.means[:] = prior_mean
        self.covs[:] = prior_cov
        self._means_alt = alloc((n, p))
        self._covs_alt = alloc((n, p, p))
        self.theta_buf = alloc((n, p))

    def permute(self, perm: np.ndarray) -> None:
        self.means[:] = self.means[perm]
        self.covs[:] = self.covs[perm]

    def sample_params(self, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((self.n, self.p))
        if self.p == 1:
            np.multiply(np.sqrt(self.covs[:, :, 0]), z, out=self.theta_buf)
        else:
            chols = np.linalg.cholesky(self.covs)
            np.einsum("nij,nj->ni", chols, z, out=self.theta_buf)
        self.theta_buf += self.means
        return self.theta_buf

    def resample(self, anc: np.ndarray) -> None:
        np.take(self.means, anc, axis=0, out=self._means_alt)
        np.take(self.covs, anc, axis=0, out=self._covs_alt)
        self.means, self._means_alt = self._means_alt, self.means
        self.covs, self._covs_alt = self._covs_alt, self.covs

    def update_scatter(self, u, inv, eval_logt, scheme, rng) -> tuple[int, int]:
        """Update rows u from their own data, scatter to all rows via inv."""
        prev_m = self.means[u]
        prev_c = self.covs[u]
        points, logw = batch_gaussian_points(prev_m, prev_c, scheme, rng)
        logt = eval_logt(u, points)
        new_m, new_c, _, ok = batch_moment_match(points, logw, logt, prev_m, prev_c)
        np.take(new_m, inv, axis=0, out=self._means_alt)
        np.take(new_c, inv, axis=0, out=self._covs_alt)
        self.means, self._means_alt = self._means_alt, self.means
        self.covs, self._covs_alt = self._covs_alt, self.covs
        return len(u), int(np.sum(~ok))

    def step_summary(self) -> tuple[np.ndarray, np.ndarray]:
        mean = self.means.mean(axis=0)
        dev = self.means - mean
        cov = self.covs.mean(axis=0) + dev.T @ dev / self.n
        return mean, cov

    def step_tables(self):
        return None

    def fuse(self) -> FusedPosterior:
        return fuse_gaussians(self.means.copy(), self.covs.copy())


class _MixtureCloud:
    kind = "mixture"

    def __init__(self, n: int, l: int, prior_means: np.ndarray, prior_cov: np.ndarray):
        p = prior_cov.shape[0]
        self.n, self.l, self.p = n, l, p
        self.alphas = alloc((n, l))
        self.means = alloc((n, l, p))
        self.covs = alloc((n, l, p, p))
        self.alphas[:] = 1.0 / l
        self.means[:] = prior_means
        self.covs[:] = prior_cov
        self._alphas_alt = alloc((n, l))
        self._means_alt = alloc((n, l, p))
        self._covs_alt = alloc((n, l, p, p))
        self.theta_buf = alloc((n, p))

    def permute(self, perm: np.ndarray) -> None:
        self.alphas[:] = self.alphas[perm]
        self.means[:] = self.means[perm]
        self.covs[:] = self.covs[perm]

    def sample_params(self, rng: np.random.Generator) -> np.ndarray:
        cdf = np.cumsum(self.alphas, axis=1)
        u = rng.random((self.n, 1))
        comp = (u >= cdf).sum(axis=1).clip(max=self.l - 1)
        rows = np.arange(self.n)
        sel_means = self.means[rows, comp]
        z = rng.standard_normal((self.n, self.p))
        if self.p == 1:
            np.multiply(np.sqrt(self.covs[rows, comp][:, :, 0]), z, out=self.theta_buf)
        else:
            sel_chols = np.linalg.cholesky(self.covs[rows, comp])
            np.einsum("nij,nj->ni", sel_chols, z, out=self.theta_buf)
        self.theta_buf += sel_means
        return self.theta_buf

    def resample(self, anc: np.ndarray) -> None:
        np.take(self.alphas, anc, axis=0, out=self._alphas_alt)
        np.take(self.means, anc, axis=0, out=self._means_alt)
        np.take(self.covs, anc, axis=0, out=self._covs_alt)
        self.alphas, self._alphas_alt = self._alphas_alt, self.alphas
        self.means, self._means_alt = self._means_alt, self.means
        self.covs, self._covs_alt = self._covs_alt, self.covs

    def update_scatter(self, u, inv, eval_logt, scheme, rng) -> tuple[int, int]:
        k = len(u)
        prev_a = self.alphas[u]
        prev_m = self.means[u]
        prev_c = self.covs[u]
        flat_m = prev_m.reshape(k * self.l, self.p)
        flat_c = prev_c.reshape(k * self.l, self.p, self.p)
        points, logw = batch_gaussian_points(flat_m, flat_c, scheme, rng)
        logt = eval_logt(np.repeat(u, self.l), points)
        new_a, new_m, new_c, ok = batch_mixture_match(
            prev_a, prev_m, prev_c, points, logw, logt
        )
        np.take(new_a, inv, axis=0, out=self._alphas_alt)
        np.take(new_m, inv, axis=0, out=self._means_alt)
        np.take(new_c, inv, axis=0, out=self._covs_alt)
        self.alphas, self._alphas_alt = self._alphas_alt, self.alphas
        self.means, self._means_alt = self._means_alt, self.means
        self.covs, self._covs_alt = self._covs_alt, self.covs
        return len(u), int(np.sum(~ok))

    def step_summary(self) -> tuple[np.ndarray, np.ndarray]:
        w = self.alphas / self.n
        flat_w = w.ravel()
        flat_m = self.means.reshape(-1, self.p)
        mean = flat_w @ flat_m
        dev = flat_m - mean
        cov = np.einsum("k,kpq->pq", flat_w, self.covs.reshape(-1, self.p, self.p))
        cov += np.einsum("k,kp,kq->pq", flat_w, dev, dev)
        return mean, cov

    def step_tables(self):
        return None

    def fuse(self) -> FusedPosterior:
        w = (self.alphas / self.n).ravel().copy()
        return fuse_gaussians(
            self.means.reshape(-1, self.p).copy(),
            self.covs.reshape(-1, self.p, self.p).copy(),
            w,
        )


class _DiscreteCloud:
    kind = "discrete"

    def __init__(self, n: int, prior_tables: np.ndarray, cardinalities: np.ndarray, m_samples: int):
        p, cmax = prior_tables.shape
        self.n, self.p, self.cmax = n, p, cmax
        self.cards = np.asarray(cardinalities, dtype=np.int64)
        self.m_samples = m_samples
        self.tables = alloc((n, p, cmax))
        self.tables[:] = prior_tables
        self._tables_alt = alloc((n, p, cmax))
        self.theta_buf = alloc((n, p), dtype=np.int64)
        joint = float(np.prod(self.cards.astype(np.float64)))
        self.exhaustive = joint <= m_samples
        self._exh_codes = enumerate_codes(self.cards) if self.exhaustive else None

    def permute(self, perm: np.ndarray) -> None:
        self.tables[:] = self.tables[perm]

    def sample_params(self, rng: np.random.Generator) -> np.ndarray:
        self.theta_buf[:] = sample_codes(self.tables, rng, 1)[:, 0, :]
        return self.theta_buf

    def resample(self, anc: np.ndarray) -> None:
        np.take(self.tables, anc, axis=0, out=self._tables_alt)
        self.tables, self._tables_alt = self._tables_alt, self.tables

    def update_scatter(self, u, inv, eval_logt, scheme, rng) -> tuple[int, int]:
        prev = self.tables[u]
        if self.exhaustive:
            codes = self._exh_codes
            k = len(u)
            log_prior = np.zeros((k, codes.shape[0]))
            with np.errstate(divide="ignore"):
                for i in range(self.p):
                    log_prior += np.log(prev[:, i, codes[:, i]])
            codes_b = np.broadcast_to(codes[None, :, :], (k,) + codes.shape)
        else:
            codes_b = sample_codes(prev, rng, self.m_samples)
            log_prior = None
        logt = eval_logt(u, codes_b)
        new_tables, ok = batch_discrete_match(prev, self.cards, codes_b, log_prior, logt)
        np.take(new_tables, inv, axis=0, out=self._tables_alt)
        self.tables, self._tables_alt = self._tables_alt, self.tables
        return len(u), int(np.sum(~ok))

    def step_summary(self) -> tuple[np.ndarray, np.ndarray]:
        fused = self.tables.mean(axis=0)
        values = np.arange(self.cmax)
        mean = fused @ values
        second = fused @ (values * values)
        return mean, np.diag(second - mean * mean)

    def step_tables(self) -> np.ndarray:
        return self.tables.mean(axis=0)

    def fuse(self) -> FusedPosterior:
        return fuse_tables(self.tables.copy(), self.cards)


def _stratified_split(mean: np.ndarray, cov: np.ndarray, l: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic l-component mixture representation of a 1-d prior.

    Component means sit at symmetric prior quantiles (built as mirrored
    pairs, so even posteriors stay exactly balanced) and the shared
    component variance is shrunk to preserve the prior's total variance.
    """
    sd = float(np.sqrt(cov[0, 0]))
    half = l // 2
    upper = ndtri((np.arange(half) + l - half + 0.5) / l)
    z = np.concatenate([-upper[::-1], [0.0] * (l % 2), upper])
    means = (mean[0] + sd * z)[:, None]
    comp_var = cov[0, 0] * max(1.0 - float(np.mean(z * z)), 0.05)
    return means, np.array([[comp_var]])


def _build_cloud(model: DynamicModel, config: FilterConfig, scheme: MomentScheme):
    family = config.resolved_family(model)
    n = config.n_particles
    p = model.dims()[0]
    if p == 0:
        raise ConfigError("model has no parameters to approximate")
    if family == "gaussian":
        mean, cov = model.param_prior_moments()
        return _GaussianCloud(n, mean, cov)
    if family == "mixture":
        mean, cov = model.param_prior_moments()
        if p == 1:
            comp_means, comp_cov = _stratified_split(mean, cov, config.mixture_size)
            prior_means = np.broadcast_to(
                comp_means[None, :, :], (n, config.mixture_size, 1)
            ).copy()
            return _MixtureCloud(n, config.mixture_size, prior_means, comp_cov)
        rng = substream(config.seed, streams.PARAM_INIT)
        draws = model.param_prior_sample(rng, n * config.mixture_size)
        prior_means = draws.reshape(n, config.mixture_size, p)
        return _MixtureCloud(n, config.mixture_size, prior_means, cov)
    tables = model.param_prior_tables()
    return _DiscreteCloud(n, tables, model.param_cardinalities, scheme.m)


def _make_eval(model, t, y, x_buf, window_buf, at_start: bool):
    """Likelihood-factor evaluator over (owner rows, points).

    At t = 0 only the observation factor applies: the parameter prior is
    already folded into the initial approximations, so including it again
    would double count.
    """

    def eval_logt(rows, points):
        k, j = points.shape[0], points.shape[1]
        flat = points.reshape(k * j, points.shape[2])
        owner = np.repeat(rows, j)
        x = x_buf[owner]
        out = model.obs_logdensity(t, y, x, flat)
        if not at_start:
            out = out + model.transition_logdensity(t, x, window_buf[owner], flat)
        return out.reshape(k, j)

    return eval_logt


def _run_filter(model: DynamicModel, observations, config: FilterConfig, mode: str) -> RunResult:
    config.validate(model)
    p, d, m = model.dims()
    obs = np.asarray(observations, dtype=np.float64).reshape(-1, m)
    if obs.shape[0] == 0:
        raise ConfigError("observations must be nonempty")
    n = config.n_particles
    order = model.markov_order()
    n_steps = obs.shape[0]

    scheme, scheme_note = (config.scheme, None)
    cloud = None
    if mode == "api":
        if config.resolved_family(model) in ("gaussian", "mixture"):
            scheme, scheme_note = resolve_scheme(config.scheme, p)
        cloud = _build_cloud(model, config, scheme)
    elif mode == "liu_west" and model.param_kind != "continuous":
        raise UnsupportedParameterKindError(
            "the kernel-perturbation filter supports continuous parameters only"
        )

    seed = config.seed
    rng_param_init = substream(seed, streams.PARAM_INIT)
    rng_state_init = substream(seed, streams.STATE_INIT)
    rng_param_draw = substream(seed, streams.PARAM_DRAW)
    rng_prop = substream(seed, streams.PROPAGATE)
    rng_res = substream(seed, streams.RESAMPLE)
    rng_moment = substream(seed, streams.MOMENT)
    rng_perturb = substream(seed, streams.PERTURB)

    store = ParticleStore(n, d, order)
    x_buf = alloc((n, d))
    theta_dtype = np.int64 if model.param_kind == "discrete" else np.float64
    thetas = alloc((n, p), dtype=theta_dtype)
    thetas_alt = alloc((n, p), dtype=theta_dtype)

    param_mean = np.zeros((n_steps, p))
    param_cov = np.zeros((n_steps, p, p))
    state_mean = np.zeros((n_steps, d))
    ess_trace = np.zeros(n_steps)
    step_ms = np.zeros(n_steps)
    n_updates = np.zeros(n_steps, dtype=np.int64)
    step_allocs = np.zeros(n_steps, dtype=np.int64)
    tables_trace = None
    if model.param_kind == "discrete":
        cmax = int(np.max(model.param_cardinalities))
        tables_trace = np.zeros((n_steps, p, cmax))

    log_ml = 0.0
    degenerate_updates = 0
    run_start = time.perf_counter()

    for t in range(n_steps):
        allocs_before = payload_allocations()
        tic = time.perf_counter()
        y = obs[t]
        if config.permute_hook is not None and config.permute_hook[0] == t:
            perm = np.asarray(config.permute_hook[1])
            if mode == "api":
                cloud.permute(perm)
            elif t > 0:
                thetas[:] = thetas[perm]
            # state windows are relabeled the same way
            if t > 0:
                store.resample(perm)
        if t == 0:
            if mode == "api":
                cur_thetas = cloud.sample_params(rng_param_draw)
            else:
                thetas[:] = model.param_prior_sample(rng_param_init, n)
                if config.permute_hook is not None and config.permute_hook[0] == 0:
                    thetas[:] = thetas[np.asarray(config.permute_hook[1])]
                cur_thetas = thetas
            x_buf[:] = model.state_prior_sample(rng_state_init, cur_thetas)
        else:
            if mode == "liu_west":
                _liu_west_perturb(thetas, config.shrinkage, rng_perturb)
            cur_thetas = cloud.sample_params(rng_param_draw) if mode == "api" else thetas
            windows = store.window()
            x_buf[:] = model.transition_sample(rng_prop, t, windows, cur_thetas)

        logw = model.obs_logdensity(t, y, x_buf, cur_thetas)
        w = normalize_log_weights(logw)
        with np.errstate(under="ignore"):
            ess_trace[t] = 1.0 / float(w @ w)
        state_mean[t] = w @ x_buf
        log_ml += log_mean_exp(logw)

        if mode == "api" and config.update_order == "update_first":
            every = np.arange(n)
            eval_logt = _make_eval(model, t, y, x_buf, store.window_buf, t == 0)
            upd, deg = cloud.update_scatter(every, every, eval_logt, scheme, rng_moment)
            n_updates[t] = upd
            degenerate_updates += deg

        store.push(x_buf)
        anc = _resample_probs(w, rng_res, config.resample)
        store.resample(anc)

        if mode == "api" and config.update_order == "resample_first":
            u, inv = distinct_sorted(anc)
            eval_logt = _make_eval(model, t, y, x_buf, store.window_buf, t == 0)
            upd, deg = cloud.update_scatter(u, inv, eval_logt, scheme, rng_moment)
            n_updates[t] = upd
            degenerate_updates += deg
        elif mode == "api":
            cloud.resample(anc)
        else:
            np.take(thetas, anc, axis=0, out=thetas_alt)
            thetas, thetas_alt = thetas_alt, thetas

        if mode == "api":
            param_mean[t], param_cov[t] = cloud.step_summary()
            if tables_trace is not None:
                tables_trace[t] = cloud.step_tables()
        else:
            if p > 0:
                param_mean[t] = thetas.mean(axis=0)
                dev = thetas - param_mean[t]
                param_cov[t] = dev.T @ dev / n
            if tables_trace is not None:
                for i in range(p):
                    counts = np.bincount(thetas[:, i], minlength=tables_trace.shape[2])
                    tables_trace[t, i] = counts / n

        step_ms[t] = (time.perf_counter() - tic) * 1e3
        step_allocs[t] = payload_allocations() - allocs_before

    if mode == "api":
        fused = cloud.fuse()
    elif model.param_kind == "discrete":
        fused = fuse_discrete_points(thetas, model.param_cardinalities)
    else:
        fused = fuse_points(thetas.copy()) if p > 0 else FusedPosterior(
            kind="points",
            mean=np.zeros(0),
            cov=np.zeros((0, 0)),
            points=np.zeros((n, 0)),
            point_weights=np.full(n, 1.0 / n),
        )

    notes = {}
    if scheme_note:
        notes["scheme"] = scheme_note
    if degenerate_updates:
        notes["degenerate_updates"] = degenerate_updates

    return RunResult(
        algorithm={"api": "api", "pf": "pf", "liu_west": "liu-west"}[mode],
        model_name=type(model).__name__,
        n_particles=n,
        seed=config.seed,
        approx_samples=scheme.m if mode == "api" else 0,
        mixture_size=config.mixture_size if (cloud is not None and cloud.kind == "mixture") else 1,
        param_mean=param_mean,
        param_cov=param_cov,
        state_mean=state_mean,
        ess=ess_trace,
        step_ms=step_ms,
        n_updates=n_updates,
        step_allocations=step_allocs,
        fused=fused,
        estimate=fused.mean.copy(),
        log_marginal_lik=float(log_ml),
        elapsed_s=time.perf_counter() - run_start,
        param_tables=tables_trace,
        scheme_kind=scheme.kind if mode == "api" else "",
        notes=notes,
    )


def _liu_west_perturb(thetas: np.ndarray, a: float, rng: np.random.Generator) -> None:
    """Shrink toward the cloud mean and add matched kernel noise in place."""
    n, p = thetas.shape
    if p == 0:
        return
    mean = thetas.mean(axis=0)
    dev = thetas - mean
    cov = dev.T @ dev / n
    eps = 1e-12 * np.trace(cov) / p + 1e-30
    chol = np.linalg.cholesky(cov + eps * np.eye(p))
    scale = np.sqrt(max(0.0, 1.0 - a * a))
    z = rng.standard_normal((n, p))
    thetas *= a
    thetas += (1.0 - a) * mean
    thetas += scale * (z @ chol.T)


def run_assumed_density_filter(model, observations, config: FilterConfig) -> RunResult:
    """Joint state/parameter filter with per-particle projection posteriors."""
    return _run_filter(model, observations, config, "api")


def run_bootstrap_filter(model, observations, config: FilterConfig) -> RunResult:
    """Plain bootstrap filter; parameters stay at their time-zero prior draws."""
    return _run_filter(model, observations, config, "pf")


def run_liu_west_filter(model, observations, config: FilterConfig) -> RunResult:
    """Bootstrap filter plus shrinkage kernel perturbation of the parameters."""
    return _run_filter(model, observations, config, "liu_west")


# ---------------------------------------------------------------------------
# Particle-marginal Metropolis-Hastings.
# ---------------------------------------------------------------------------


@dataclass
class PmmhConfig:
    inner_particles: int = 50
    iterations: int = 1000
    proposal_sd: float = 0.15
    bounds: tuple[float, float] = (-5.0, 5.0)
    seed: int = 0
    time_budget_s: float | None = None
    init: np.ndarray | None = None


@dataclass
class PmmhResult:
    chain: np.ndarray
    log_liks: np.ndarray
    accepted: np.ndarray
    estimate: np.ndarray
    acceptance_rate: float
    elapsed_s: float
    rejected_nonfinite: int
    param_kind: str = "continuous"

    @property
    def n_iterations(self) -> int:
        return self.chain.shape[0] - 1

    def burned_in(self) -> np.ndarray:
        return self.chain[self.chain.shape[0] // 2 :]

    def posterior_tables(self, cardinalities: np.ndarray) -> np.ndarray:
        """Marginal code frequencies of the post-burn-in chain."""
        samples = self.burned_in().astype(np.int64)
        cmax = int(np.max(cardinalities))
        tables = np.zeros((samples.shape[1], cmax))
        for i in range(samples.shape[1]):
            counts = np.bincount(samples[:, i], minlength=cmax)
            tables[i] = counts / counts.sum()
        return tables


def _truncnorm_log_z(theta: np.ndarray, sd: float, lo: float, hi: float) -> float:
    z = ndtr((hi - theta) / sd) - ndtr((lo - theta) / sd)
    return float(np.sum(np.log(z)))


def run_pmmh(model: DynamicModel, observations, config: PmmhConfig) -> PmmhResult:
    """Metropolis-Hastings over theta with a particle likelihood estimate.

    Continuous parameters move by a truncated-Gaussian random walk inside
    config.bounds, with the truncation-normalizer ratio included in the
    acceptance probability.  Discrete parameters redraw one uniformly
    chosen coordinate from its code set, a symmetric proposal.  The
    likelihood p(y | theta) is estimated by a fresh bootstrap filter with
    config.inner_particles at every proposal; iterations with a
    non-finite estimate are rejected and counted.

    The returned estimate is the mean of the last half of the chain, the
    first half being discarded as burn-in.
    """
    p, d, m = model.dims()
    if p == 0:
        raise ConfigError("model has no parameters to sample")
    obs = np.asarray(observations, dtype=np.float64).reshape(-1, m)
    discrete = model.param_kind == "discrete"
    rng = substream(config.seed, streams.CHAIN)
    lo, hi = config.bounds

    if config.init is not None:
        theta = np.asarray(config.init, dtype=np.float64).reshape(p)
    else:
        theta = model.param_prior_sample(rng, 1)[0].astype(np.float64)
        if not discrete:
            theta = np.clip(theta, lo, hi)

    def loglik(th, it):
        return pf_log_likelihood(
            model, th, obs, config.inner_particles, substream(config.seed, streams.CHAIN, 1 + it)
        )

    started = time.perf_counter()
    ll = loglik(theta, 0)
    lp = float(model.param_prior_logdensity(theta[None, :])[0])
    chain = [theta.copy()]
    lls = [ll]
    accepted = [True]
    rejected_nonfinite = 0

    it = 0
    while it < config.iterations:
        if config.time_budget_s is not None and it >= 1:
            if time.perf_counter() - started > config.time_budget_s:
                break
        it += 1
        if discrete:
            prop = theta.copy()
            coord = rng.integers(0, p)
            card = int(model.param_cardinalities[coord])
            prop[coord] = rng.integers(0, card)
            log_q_correction = 0.0
        else:
            a = (lo - theta) / config.proposal_sd
            b = (hi - theta) / config.proposal_sd
            prop = truncnorm.rvs(
                a, b, loc=theta, scale=config.proposal_sd, random_state=rng
            )
            prop = np.atleast_1d(prop)
            log_q_correction = _truncnorm_log_z(
                theta, config.proposal_sd, lo, hi
            ) - _truncnorm_log_z(prop, config.proposal_sd, lo, hi)

        ll_prop = loglik(prop, it)
        lp_prop = float(model.param_prior_logdensity(prop[None, :])[0])
        if not np.isfinite(ll_prop):
            rejected_nonfinite += 1
            accept = False
        else:
            log_alpha = (ll_prop + lp_prop) - (ll + lp) + log_q_correction
            accept = np.log(rng.random()) < log_alpha
        if accept:
            theta, ll, lp = prop, ll_prop, lp_prop
        chain.append(theta.copy())
        lls.append(ll)
        accepted.append(bool(accept))

    chain_arr = np.asarray(chain)
    estimate = chain_arr[chain_arr.shape[0] // 2 :].mean(axis=0)
    return PmmhResult(
        chain=chain_arr,
        log_liks=np.asarray(lls),
        accepted=np.asarray(accepted, dtype=bool),
        estimate=estimate,
        acceptance_rate=float(np.mean(accepted[1:])) if len(accepted) > 1 else 0.0,
        elapsed_s=time.perf_counter() - started,
        rejected_nonfinite=rejected_nonfinite,
        param_kind=model.param_kind,
    )


ALGORITHMS = {
    "api": run_assumed_density_filter,
    "pf": run_bootstrap_filter,
    "liu-west": run_liu_west_filter,
}

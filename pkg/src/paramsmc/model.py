"""State-space model interface and generic model-level operations.

A model describes a partially observed Markov process with static
parameters theta:

    x_0 ~ p(x_0)
    x_t | window ~ p(x_t | x_{t-D:t-1}, theta)
    y_t | x_t   ~ p(y_t | x_t, theta)

All model methods are vectorized over a leading batch axis: `thetas` has
shape (n, p), states (n, d), state windows (n, D, d) with the newest state
last.  Log-densities return (n,) arrays whose entries are finite or -inf,
never NaN.  Models must be immutable after construction and are safe to
share across threads.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .rng import substream

LOG_2PI = np.log(2.0 * np.pi)

# Array conventions: a parameter vector is (p,) float64 (continuous) or
# (p,) int64 codes (discrete); states are (d,) and observations (m,)
# float64.  Batched variants stack along a leading axis.
ParamVector = np.ndarray
StateVector = np.ndarray
ObsVector = np.ndarray


class DynamicModel(ABC):
    """Interface every model implements.

    Attributes:
        param_kind: "continuous" or "discrete".
        param_cardinalities: (p,) int array of per-dimension code
            cardinalities; only meaningful for discrete parameters.
        state_prior_depends_on_params: whether p(x_0) depends on theta.
            When true, the k=0 likelihood factor includes the state prior
            term.
    """

    param_kind: str = "continuous"
    param_cardinalities: np.ndarray | None = None
    state_prior_depends_on_params: bool = False

    @abstractmethod
    def dims(self) -> tuple[int, int, int]:
        """(p, d, m): parameter, state, and observation dimensions."""

    def markov_order(self) -> int:
        return 1

    @abstractmethod
    def param_prior_sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw (n, p) parameters from the prior."""

    @abstractmethod
    def param_prior_logdensity(self, thetas: np.ndarray) -> np.ndarray:
        """(n,) log prior density at each row of thetas."""

    @abstractmethod
    def state_prior_sample(self, rng: np.random.Generator, thetas: np.ndarray) -> np.ndarray:
        """Draw (n, d) initial states, one per theta row."""

    @abstractmethod
    def transition_sample(
        self, rng: np.random.Generator, t: int, windows: np.ndarray, thetas: np.ndarray
    ) -> np.ndarray:
        """Draw x_t given the (n, D, d) state windows."""

    @abstractmethod
    def transition_logdensity(
        self, t: int, x_new: np.ndarray, windows: np.ndarray, thetas: np.ndarray
    ) -> np.ndarray:
        """(n,) log density of x_new under the transition kernel."""

    @abstractmethod
    def obs_sample(self, rng: np.random.Generator, t: int, states: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        """Draw (n, m) observations."""

    @abstractmethod
    def obs_logdensity(self, t: int, y: np.ndarray, states: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        """(n,) log density of observation y at each state/theta row."""

    def state_prior_logdensity(self, x0: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        """Only required when state_prior_depends_on_params is true."""
        raise NotImplementedError

    # Prior summaries used to seed parameter approximations.  The defaults
    # estimate moments from a fixed internal sample; models with known
    # priors should override with exact values.

    def param_prior_moments(self) -> tuple[np.ndarray, np.ndarray]:
        rng = substream(0x9E3779B9, 0)
        draws = self.param_prior_sample(rng, 8192)
        mean = draws.mean(axis=0)
        dev = draws - mean
        cov = dev.T @ dev / (draws.shape[0] - 1)
        return mean, cov

    def param_prior_tables(self) -> np.ndarray:
        if self.param_cardinalities is None:
            raise NotImplementedError("model does not declare discrete parameters")
        rng = substream(0x9E3779B9, 1)
        draws = self.param_prior_sample(rng, 8192)
        p = draws.shape[1]
        cmax = int(np.max(self.param_cardinalities))
        tables = np.zeros((p, cmax))
        for i in range(p):
            counts = np.bincount(draws[:, i].astype(int), minlength=cmax)
            tables[i] = counts / counts.sum()
        return tables


@dataclass(frozen=True)
class ParamLikelihood:
    """Deferred evaluator of the per-step parameter likelihood factor.

    For fixed (x_k, window, y_k) this computes, as a pure function of
    theta,

        log t_0(theta) = log p(theta) + log p(y_0 | x_0, theta)
        log t_k(theta) = log p(y_k | x_k, theta) + log p(x_k | window, theta)

    for k = 0 and k >= 1 respectively.  Calling it with an (n, p) array of
    parameters returns the (n,) vector of log values.
    """

    model: DynamicModel
    k: int
    x_new: np.ndarray
    window: np.ndarray | None
    y: np.ndarray

    def __call__(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_2d(thetas)
        n = thetas.shape[0]
        x = np.broadcast_to(self.x_new, (n,) + self.x_new.shape)
        out = self.model.obs_logdensity(self.k, self.y, x, thetas)
        if self.k == 0:
            out = out + self.model.param_prior_logdensity(thetas)
            if self.model.state_prior_depends_on_params:
                out = out + self.model.state_prior_logdensity(x, thetas)
        else:
            windows = np.broadcast_to(self.window, (n,) + self.window.shape)
            out = out + self.model.transition_logdensity(self.k, x, windows, thetas)
        return out


def make_param_likelihood(
    model: DynamicModel,
    k: int,
    x_new: np.ndarray,
    window: list[np.ndarray] | np.ndarray | None,
    y: np.ndarray,
) -> ParamLikelihood:
    """Build the log t_k evaluator for one assimilated observation.

    Args:
        model: the state-space model.
        k: timestep; k = 0 uses the prior + observation form and must be
            given an empty window.
        x_new: (d,) state at time k.
        window: the D previous states (list or (D, d) array), newest last;
            empty/None at k = 0.
        y: (m,) observation at time k.
    """
    p, d, m = model.dims()
    x_new = np.asarray(x_new, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x_new.shape[0] != d:
        raise DimensionMismatchError(f"state has dim {x_new.shape[0]}, model declares {d}")
    if y.shape[0] != m:
        raise DimensionMismatchError(f"observation has dim {y.shape[0]}, model declares {m}")
    if k == 0:
        if window is not None and len(window) != 0:
            raise DimensionMismatchError("window must be empty at k = 0")
        win = None
    else:
        win = np.asarray(window, dtype=np.float64)
        if win.ndim == 1:
            win = win[:, None]
        if win.shape != (model.markov_order(), d):
            raise DimensionMismatchError(
                f"window shape {win.shape} != ({model.markov_order()}, {d})"
            )
    return ParamLikelihood(model=model, k=k, x_new=x_new, window=win, y=y)


def simulate(
    model: DynamicModel,
    theta: np.ndarray,
    steps: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw a length steps+1 trajectory under a fixed parameter.

    Returns (states, observations) of shapes (steps+1, d) and
    (steps+1, m).  Deterministic given the generator state.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    p, d, m = model.dims()
    order = model.markov_order()
    theta_row = np.asarray(theta).reshape(1, p)
    states = np.zeros((steps + 1, d))
    obs = np.zeros((steps + 1, m))
    window = np.zeros((1, order, d))
    x = model.state_prior_sample(rng, theta_row)
    states[0] = x[0]
    obs[0] = model.obs_sample(rng, 0, x, theta_row)[0]
    for t in range(1, steps + 1):
        window[0, :-1] = window[0, 1:]
        window[0, -1] = x[0]
        x = model.transition_sample(rng, t, window, theta_row)
        states[t] = x[0]
        obs[t] = model.obs_sample(rng, t, x, theta_row)[0]
    return states, obs


def gaussian_logpdf(x, mean, sd):
    """Elementwise scalar Gaussian log density; sd must be positive."""
    sd = np.asarray(sd, dtype=np.float64)
    if np.any(sd <= 0):
        raise ValueError("gaussian_logpdf requires positive standard deviation")
    z = (np.asarray(x) - np.asarray(mean)) / sd
    return -0.5 * z * z - np.log(sd) - 0.5 * LOG_2PI

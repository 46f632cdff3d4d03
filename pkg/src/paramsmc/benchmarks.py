"""Benchmark models: SIN, its bimodal variant, grid SLAM, linear-Gaussian.

Every model implements the vectorized DynamicModel interface.  Canned
instances are loadable by name via :func:`get_model`.
"""

import json
from importlib import resources

import numpy as np

from .errors import ConfigError
from .model import DynamicModel, gaussian_logpdf


class SinModel(DynamicModel):
    """Nonlinear scalar model x_t = sin(theta * x_{t-1}) + v_t, y_t = x_t + w_t.

    The bimodal variant drives the recursion with sin(theta^2 * x_{t-1}),
    which makes the parameter posterior symmetric in theta and therefore
    bimodal at +/- the generating value.  Zero noise scales are accepted
    as a test hook for deterministic simulation; densities then refuse to
    evaluate.
    """

    def __init__(
        self,
        variant: str = "plain",
        obs_sd: float = 0.5,
        trans_sd: float = 1.0,
        prior_mean: float = 0.0,
        prior_sd: float = 1.0,
        x0_mean: float = 0.0,
        x0_sd: float = 1.0,
    ):
        if variant not in ("plain", "bimodal"):
            raise ConfigError(f"unknown SIN variant {variant!r}")
        self.variant = variant
        self.obs_sd = float(obs_sd)
        self.trans_sd = float(trans_sd)
        self.prior_mean = float(prior_mean)
        self.prior_sd = float(prior_sd)
        self.x0_mean = float(x0_mean)
        self.x0_sd = float(x0_sd)

    def dims(self):
        return (1, 1, 1)

    def _drive(self, thetas, x_prev):
        if self.variant == "bimodal":
            return np.sin(thetas * thetas * x_prev)
        return np.sin(thetas * x_prev)

    def param_prior_sample(self, rng, n):
        return self.prior_mean + self.prior_sd * rng.standard_normal((n, 1))

    def param_prior_logdensity(self, thetas):
        return gaussian_logpdf(thetas[:, 0], self.prior_mean, self.prior_sd)

    def param_prior_moments(self):
        return np.array([self.prior_mean]), np.array([[self.prior_sd**2]])

    def state_prior_sample(self, rng, thetas):
        n = thetas.shape[0]
        return self.x0_mean + self.x0_sd * rng.standard_normal((n, 1))

    def transition_sample(self, rng, t, windows, thetas):
        loc = self._drive(thetas[:, 0], windows[:, -1, 0])
        return (loc + self.trans_sd * rng.standard_normal(loc.shape))[:, None]

    def transition_logdensity(self, t, x_new, windows, thetas):
        loc = self._drive(thetas[:, 0], windows[:, -1, 0])
        return gaussian_logpdf(x_new[:, 0], loc, self.trans_sd)

    def obs_sample(self, rng, t, states, thetas):
        return states + self.obs_sd * rng.standard_normal(states.shape)

    def obs_logdensity(self, t, y, states, thetas):
        return gaussian_logpdf(y[0], states[:, 0], self.obs_sd)


class LinearGaussianModel(DynamicModel):
    """Scalar AR(1) with additive Gaussian observation noise.

    x_t = theta * x_{t-1} + v_t and y_t = x_t + w_t.  Admits exact Kalman
    filtering at fixed theta, which makes it the validation model for the
    particle baselines.  Pass theta_fixed to obtain the state-only variant
    with an empty parameter vector.
    """

    def __init__(
        self,
        trans_sd: float = 1.0,
        obs_sd: float = 1.0,
        prior_mean: float = 0.0,
        prior_sd: float = 1.0,
        x0_mean: float = 0.0,
        x0_sd: float = 1.0,
        theta_fixed: float | None = None,
    ):
        self.trans_sd = float(trans_sd)
        self.obs_sd = float(obs_sd)
        self.prior_mean = float(prior_mean)
        self.prior_sd = float(prior_sd)
        self.x0_mean = float(x0_mean)
        self.x0_sd = float(x0_sd)
        self.theta_fixed = None if theta_fixed is None else float(theta_fixed)

    def dims(self):
        return (0 if self.theta_fixed is not None else 1, 1, 1)

    def _theta(self, thetas):
        if self.theta_fixed is not None:
            return self.theta_fixed
        return thetas[:, 0]

    def param_prior_sample(self, rng, n):
        if self.theta_fixed is not None:
            return np.zeros((n, 0))
        return self.prior_mean + self.prior_sd * rng.standard_normal((n, 1))

    def param_prior_logdensity(self, thetas):
        if self.theta_fixed is not None:
            return np.zeros(thetas.shape[0])
        return gaussian_logpdf(thetas[:, 0], self.prior_mean, self.prior_sd)

    def param_prior_moments(self):
        if self.theta_fixed is not None:
            return np.zeros(0), np.zeros((0, 0))
        return np.array([self.prior_mean]), np.array([[self.prior_sd**2]])

    def state_prior_sample(self, rng, thetas):
        n = thetas.shape[0]
        return self.x0_mean + self.x0_sd * rng.standard_normal((n, 1))

    def transition_sample(self, rng, t, windows, thetas):
        loc = self._theta(thetas) * windows[:, -1, 0]
        return (loc + self.trans_sd * rng.standard_normal(windows.shape[0]))[:, None]

    def transition_logdensity(self, t, x_new, windows, thetas):
        loc = self._theta(thetas) * windows[:, -1, 0]
        return gaussian_logpdf(x_new[:, 0], loc, self.trans_sd)

    def obs_sample(self, rng, t, states, thetas):
        return states + self.obs_sd * rng.standard_normal(states.shape)

    def obs_logdensity(self, t, y, states, thetas):
        return gaussian_logpdf(y[0], states[:, 0], self.obs_sd)


class SlamModel(DynamicModel):
    """1-d grid localization with an unknown cell-label map.

    The parameters are the n_cells discrete labels; the state is the
    robot's cell index.  An action sequence drives the transition: the
    robot moves one cell in the commanded direction with probability
    p_move and otherwise stays (wheel slip).  Moves into a wall clamp, so
    commanding left at cell 0 stays put with probability one.  The label
    of the occupied cell is observed correctly with probability p_obs,
    and uniformly among the wrong labels otherwise.
    """

    param_kind = "discrete"

    def __init__(
        self,
        n_cells: int,
        actions,
        n_labels: int = 2,
        p_move: float = 0.8,
        p_obs: float = 0.9,
        initial_location_dist: np.ndarray | None = None,
        true_map: np.ndarray | None = None,
    ):
        if len(actions) == 0:
            raise ConfigError("SLAM needs a nonempty action sequence")
        self.n_cells = int(n_cells)
        self.n_labels = int(n_labels)
        self.p_move = float(p_move)
        self.p_obs = float(p_obs)
        self.actions = np.array([+1 if a in ("R", "right", 1, +1) else -1 for a in actions])
        if initial_location_dist is None:
            self.initial_location_dist = np.full(self.n_cells, 1.0 / self.n_cells)
        else:
            dist = np.asarray(initial_location_dist, dtype=np.float64)
            self.initial_location_dist = dist / dist.sum()
        self.true_map = None if true_map is None else np.asarray(true_map, dtype=np.int64)
        self.param_cardinalities = np.full(self.n_cells, self.n_labels, dtype=np.int64)

    def dims(self):
        return (self.n_cells, 1, 1)

    def n_steps(self) -> int:
        return len(self.actions)

    def _action(self, t: int) -> int:
        # action[t-1] drives the transition into time t
        return int(self.actions[t - 1])

    def param_prior_sample(self, rng, n):
        return rng.integers(0, self.n_labels, size=(n, self.n_cells)).astype(np.int64)

    def param_prior_logdensity(self, thetas):
        return np.full(thetas.shape[0], -self.n_cells * np.log(self.n_labels))

    def param_prior_tables(self):
        return np.full((self.n_cells, self.n_labels), 1.0 / self.n_labels)

    def state_prior_sample(self, rng, thetas):
        n = thetas.shape[0]
        locs = rng.choice(self.n_cells, size=n, p=self.initial_location_dist)
        return locs.astype(np.float64)[:, None]

    def _targets(self, locs: np.ndarray, t: int) -> np.ndarray:
        return np.clip(locs + self._action(t), 0, self.n_cells - 1)

    def transition_sample(self, rng, t, windows, thetas):
        locs = windows[:, -1, 0].astype(np.int64)
        targets = self._targets(locs, t)
        move = rng.random(locs.shape[0]) < self.p_move
        return np.where(move, targets, locs).astype(np.float64)[:, None]

    def transition_logdensity(self, t, x_new, windows, thetas):
        locs = windows[:, -1, 0].astype(np.int64)
        targets = self._targets(locs, t)
        new = x_new[:, 0].astype(np.int64)
        out = np.full(locs.shape[0], -np.inf)
        stay_p = np.where(targets == locs, 1.0, 1.0 - self.p_move)
        out = np.where(new == targets, np.log(self.p_move), out)
        with np.errstate(divide="ignore"):
            out = np.where(new == locs, np.log(stay_p), out)
        return out

    def obs_sample(self, rng, t, states, thetas):
        locs = states[:, 0].astype(np.int64)
        truth = thetas[np.arange(thetas.shape[0]), locs]
        correct = rng.random(locs.shape[0]) < self.p_obs
        offset = rng.integers(1, self.n_labels, size=locs.shape[0])
        wrong = (truth + offset) % self.n_labels
        return np.where(correct, truth, wrong).astype(np.float64)[:, None]

    def obs_logdensity(self, t, y, states, thetas):
        locs = states[:, 0].astype(np.int64)
        truth = thetas[np.arange(thetas.shape[0]), locs]
        label = int(round(float(np.asarray(y).reshape(-1)[0])))
        if label < 0 or label >= self.n_labels:
            return np.full(locs.shape[0], -np.inf)
        wrong_p = (1.0 - self.p_obs) / (self.n_labels - 1) if self.n_labels > 1 else 0.0
        with np.errstate(divide="ignore"):
            return np.where(truth == label, np.log(self.p_obs), np.log(wrong_p))

    def location_transition_matrix(self, t: int) -> np.ndarray:
        """(n_cells, n_cells) matrix P[i, j] = p(loc_t = j | loc_{t-1} = i)."""
        mat = np.zeros((self.n_cells, self.n_cells))
        for i in range(self.n_cells):
            j = int(np.clip(i + self._action(t), 0, self.n_cells - 1))
            if j == i:
                mat[i, i] = 1.0
            else:
                mat[i, j] = self.p_move
                mat[i, i] = 1.0 - self.p_move
        return mat


def _load_slam_spec() -> dict:
    path = resources.files("paramsmc").joinpath("data/slam_small.json")
    return json.loads(path.read_text())


def slam_small(**overrides) -> SlamModel:
    """The 8-cell instance: p_move 0.8, p_obs 0.9, 16 actions."""
    spec = _load_slam_spec()
    kwargs = dict(
        n_cells=spec["n_cells"],
        actions=spec["actions"],
        n_labels=spec["n_labels"],
        p_move=spec["p_move"],
        p_obs=spec["p_obs"],
        true_map=spec["true_map"],
    )
    kwargs.update(overrides)
    return SlamModel(**kwargs)


def slam_large(**overrides) -> SlamModel:
    """The enlarged instance: 20 cells, the small action list cycled to 164."""
    spec = _load_slam_spec()
    n_cells = 20
    reps = -(-164 // len(spec["actions"]))
    actions = (spec["actions"] * reps)[:164]
    base_map = spec["true_map"]
    true_map = (base_map * -(-n_cells // len(base_map)))[:n_cells]
    kwargs = dict(
        n_cells=n_cells,
        actions=actions,
        n_labels=spec["n_labels"],
        p_move=spec["p_move"],
        p_obs=spec["p_obs"],
        true_map=true_map,
    )
    kwargs.update(overrides)
    return SlamModel(**kwargs)


MODEL_BUILDERS = {
    "sin": lambda **kw: SinModel(variant="plain", **kw),
    "sin-bimodal": lambda **kw: SinModel(variant="bimodal", **kw),
    "lg": lambda **kw: LinearGaussianModel(**kw),
    "slam-small": slam_small,
    "slam-large": slam_large,
}

# Generating parameter used by `simulate` when none is given explicitly.
DEFAULT_TRUE_PARAMS = {
    "sin": np.array([-0.5]),
    "sin-bimodal": np.array([0.7]),
    "lg": np.array([0.7]),
}


def get_model(name: str, **overrides) -> DynamicModel:
    """Construct a canned model by name, with field overrides."""
    if name not in MODEL_BUILDERS:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(MODEL_BUILDERS)}")
    try:
        return MODEL_BUILDERS[name](**overrides)
    except TypeError as exc:
        raise ConfigError(f"bad override for model {name!r}: {exc}") from exc


def default_true_params(name: str, model: DynamicModel) -> np.ndarray:
    if name in DEFAULT_TRUE_PARAMS:
        return DEFAULT_TRUE_PARAMS[name].copy()
    if isinstance(model, SlamModel) and model.true_map is not None:
        return model.true_map.astype(np.float64)
    raise ConfigError(f"model {name!r} has no default generating parameters")

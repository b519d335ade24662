import numpy as np

from ..errors import ModelError
from ..lyapunov import LyapunovData
from .base import SdeModel, positive


class ThresholdOU(SdeModel):
    """Threshold Ornstein-Uhlenbeck process.

    ``dX = sum_i (beta_i - alpha_i X) 1{theta_{i-1} <= X < theta_i} dt + sigma dW``
    with ``theta_0 = -inf`` and ``theta_n = +inf``; ``thresholds`` lists the
    interior points ``theta_1 < ... < theta_{n-1}``.  The drift jumps at the
    thresholds.
    """

    name = "threshold_ou"
    priority = 50
    non_lipschitz_drift = True
    defaults = {"betas": [0.0], "alphas": [1.0], "thresholds": [], "sigma": 0.5}
    default_x0 = (0.5,)

    def validate(self, params):
        betas = np.array(params["betas"], dtype=float).reshape(-1)
        alphas = np.array(params["alphas"], dtype=float).reshape(-1)
        thresholds = np.array(params["thresholds"], dtype=float).reshape(-1)
        if len(betas) < 1 or len(alphas) != len(betas) or len(thresholds) != len(betas) - 1:
            raise ModelError("threshold_ou needs n betas, n alphas and n-1 thresholds")
        if np.any(np.diff(thresholds) <= 0):
            raise ModelError("thresholds must be strictly increasing")
        positive({"alphas": alphas}, "alphas")
        sigma = float(params["sigma"])
        if not np.isfinite(sigma) or sigma < 0:
            raise ModelError("sigma must be non-negative, got %r" % (params["sigma"],))
        for array in (betas, alphas, thresholds):
            array.flags.writeable = False
        return {"betas": betas, "alphas": alphas, "thresholds": thresholds, "sigma": sigma}

    def regime(self, x):
        """Index ``i - 1`` of the regime ``theta_{i-1} <= x < theta_i``."""
        return np.searchsorted(self.params["thresholds"], x, side="right")

    def drift(self, x):
        x = np.asarray(x, dtype=float)
        i = self.regime(x)
        return self.params["betas"][i] - self.params["alphas"][i] * x

    def diffusion(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape + (1,), self.params["sigma"])

    def diffusion_gradient(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape + (1, 1))

    def lyapunov(self, theta=None, eta=None):
        theta = theta or 1.0
        eta = eta or 1.0
        sigma2 = self.params["sigma"] ** 2
        peak = float(np.max(self.params["betas"] ** 2 / (2.0 * self.params["alphas"])))
        C = 1.0 + peak + theta * sigma2 + 4.0 * sigma2 / eta

        def V(x):
            return np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)

        def gradV(x):
            return 2.0 * np.asarray(x, dtype=float)

        def hessV(x):
            x = np.asarray(x, dtype=float)
            return np.full(x.shape + (1,), 2.0)

        return LyapunovData(V, gradV, hessV, theta=theta, eta=eta, C=C, M=1.0, description="x^2")

    def exact_states(self, W, x0):
        """The linear solution when there is a single regime, ``None`` otherwise.

        The mean part uses the exact transition ``x -> a x + (beta/alpha)(1 - a)``
        with ``a = exp(-alpha dt)``.  The noise integral over each step is
        replaced by its conditional mean given the increment,
        ``sigma (1 - a) / (alpha dt) dW``.
        """
        if len(self.params["betas"]) != 1:
            return None
        alpha = float(self.params["alphas"][0])
        beta = float(self.params["betas"][0])
        sigma = self.params["sigma"]
        decay = np.exp(-alpha * W.dt)
        weight = sigma * -np.expm1(-alpha * W.dt) / (alpha * W.dt)
        batch = W.increments.shape[:-2]
        states = np.empty(batch + (W.steps + 1, 1))
        x = np.broadcast_to(np.asarray(x0, dtype=float).reshape(-1), batch + (1,)).copy()
        states[..., 0, :] = x
        for i in range(W.steps):
            x = decay * x + (beta / alpha) * (1.0 - decay) + weight * W.increments[..., i, :]
            states[..., i + 1, :] = x
        return states


model_class = ThresholdOU

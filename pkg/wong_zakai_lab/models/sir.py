import numpy as np

from ..coefficients import AdmissibleRegion
from ..lyapunov import LyapunovData
from .base import SdeModel, positive


class SIR(SdeModel):
    """Stochastic SIR model with noisy transmission.

    ``b = (-alpha x1 x2 - kappa x1 + kappa, alpha x1 x2 - (gamma + kappa) x2, gamma x2 - kappa x3)``
    and ``sigma = (-beta x1 x2, beta x1 x2, 0)``.  The noise moves mass between
    the first two compartments only, so the rows of ``sigma`` sum to zero.
    """

    name = "sir"
    priority = 40
    dim = 3
    defaults = {"alpha": 2.0, "beta": 0.5, "gamma": 0.5, "kappa": 0.1}
    default_x0 = (0.9, 0.1, 0.0)

    @property
    def region(self):
        return AdmissibleRegion.nonnegative_orthant()

    def validate(self, params):
        positive(params, "alpha", "beta", "gamma", "kappa")
        return {k: float(v) for k, v in params.items()}

    def drift(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        contact = p["alpha"] * x1 * x2
        return np.stack(
            [
                -contact - p["kappa"] * x1 + p["kappa"],
                contact - (p["gamma"] + p["kappa"]) * x2,
                p["gamma"] * x2 - p["kappa"] * x3,
            ],
            axis=-1,
        )

    def diffusion(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (3, 1))
        noise = self.params["beta"] * x[..., 0] * x[..., 1]
        out[..., 0, 0] = -noise
        out[..., 1, 0] = noise
        return out

    def diffusion_gradient(self, x):
        x = np.asarray(x, dtype=float)
        beta = self.params["beta"]
        out = np.zeros(x.shape[:-1] + (3, 1, 3))
        out[..., 0, 0, 0] = -beta * x[..., 1]
        out[..., 0, 0, 1] = -beta * x[..., 0]
        out[..., 1, 0, 0] = beta * x[..., 1]
        out[..., 1, 0, 1] = beta * x[..., 0]
        return out

    def lyapunov(self, theta=None, eta=None):
        def V(x):
            x = np.asarray(x, dtype=float)
            return (x[..., 0] + x[..., 1] - 1.0) ** 2

        def gradV(x):
            x = np.asarray(x, dtype=float)
            slope = 2.0 * (x[..., 0] + x[..., 1] - 1.0)
            return np.stack([slope, slope, np.zeros_like(slope)], axis=-1)

        def hessV(x):
            x = np.asarray(x, dtype=float)
            block = np.array([[2.0, 2.0, 0.0], [2.0, 2.0, 0.0], [0.0, 0.0, 0.0]])
            return np.broadcast_to(block, x.shape[:-1] + (3, 3)).copy()

        # On the orthant <b, grad V> <= gamma / 2 and the noise terms vanish.
        return LyapunovData(V, gradV, hessV, theta=theta or 1.0, eta=eta or 1.0, C=self.params["gamma"], M=1.0, description="(x1 + x2 - 1)^2")


model_class = SIR

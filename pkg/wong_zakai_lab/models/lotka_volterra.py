import numpy as np

from ..coefficients import AdmissibleRegion
from ..errors import ModelError
from ..lyapunov import LyapunovData
from .base import SdeModel, positive


class LotkaVolterra3(SdeModel):
    """Three-species competitive Lotka-Volterra system with common noise.

    Ito form ``dy_i = y_i (r + gamma^2/2 - sum_j a_ij y_j) dt + gamma y_i dW``,
    equivalent to the Stratonovich system with drift ``y_i (r - sum_j a_ij y_j)``.
    Lives on the open positive orthant.
    """

    name = "lotka_volterra3"
    priority = 30
    dim = 3
    defaults = {
        "r": 1.0,
        "gamma": 0.5,
        "a": [[1.0, 0.2, 0.2], [0.2, 1.0, 0.2], [0.2, 0.2, 1.0]],
    }
    default_x0 = (0.5, 0.5, 0.5)

    @property
    def region(self):
        return AdmissibleRegion.positive_orthant()

    def validate(self, params):
        a = np.array(params["a"], dtype=float)
        if a.shape != (3, 3):
            raise ModelError("interaction matrix a must be 3 x 3, got shape %r" % (a.shape,))
        positive(params, "r", "gamma")
        positive({"a": a}, "a")
        a.flags.writeable = False
        return {"r": float(params["r"]), "gamma": float(params["gamma"]), "a": a}

    def drift(self, x):
        y = np.asarray(x, dtype=float)
        p = self.params
        return y * (p["r"] + 0.5 * p["gamma"] ** 2 - y @ p["a"].T)

    def diffusion(self, x):
        y = np.asarray(x, dtype=float)
        return (self.params["gamma"] * y)[..., None]

    def diffusion_gradient(self, x):
        y = np.asarray(x, dtype=float)
        out = np.zeros(y.shape[:-1] + (3, 1, 3))
        for i in range(3):
            out[..., i, 0, i] = self.params["gamma"]
        return out

    def lyapunov(self, theta=None, eta=None):
        theta = theta or 1.0
        eta = eta or 1.0
        r, gamma = self.params["r"], self.params["gamma"]

        def V(x):
            return np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)

        def gradV(x):
            return 2.0 * np.asarray(x, dtype=float)

        def hessV(x):
            x = np.asarray(x, dtype=float)
            return np.broadcast_to(2.0 * np.eye(3), x.shape[:-1] + (3, 3)).copy()

        C = 2.0 * (r + 0.5 * gamma ** 2) + theta * gamma ** 2 + 4.0 * gamma ** 2 / eta
        return LyapunovData(V, gradV, hessV, theta=theta, eta=eta, C=C, M=1.0, description="|y|^2")


model_class = LotkaVolterra3

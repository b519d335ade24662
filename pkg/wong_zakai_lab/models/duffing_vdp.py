import numpy as np

from ..errors import ModelError
from ..lyapunov import LyapunovData
from .base import SdeModel, positive


class DuffingVanDerPol(SdeModel):
    """Stochastic Duffing-van der Pol oscillator written as a first-order system.

    ``dx1 = x2 dt``,
    ``dx2 = (alpha2 x2 - alpha1 x1 - alpha3 x1^2 x2 - x1^3) dt + g(x1) dW``.

    ``g`` defaults to ``sqrt(eta0 + eta1 x^4)``, which meets the growth bound
    ``|g(x)|^2 <= eta0 + eta1 |x|^4`` with equality.  A custom ``g`` must come
    with its derivative ``dg``.
    """

    name = "duffing_vdp"
    priority = 20
    dim = 2
    defaults = {"alpha1": 1.0, "alpha2": 0.5, "alpha3": 1.0, "eta0": 1.0, "eta1": 1.0, "g": None, "dg": None}
    default_x0 = (0.5, 0.0)

    def validate(self, params):
        positive(params, "alpha1", "alpha2", "alpha3", "eta0", "eta1")
        params = dict(params)
        if (params["g"] is None) != (params["dg"] is None):
            raise ModelError("a custom g needs its derivative dg, and vice versa")
        if params["g"] is None:
            eta0, eta1 = float(params["eta0"]), float(params["eta1"])

            def g(x):
                return np.sqrt(eta0 + eta1 * x ** 4)

            def dg(x):
                return 2.0 * eta1 * x ** 3 / np.sqrt(eta0 + eta1 * x ** 4)

            params["g"], params["dg"] = g, dg
        return params

    def drift(self, x):
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        p = self.params
        return np.stack([x2, p["alpha2"] * x2 - p["alpha1"] * x1 - p["alpha3"] * x1 ** 2 * x2 - x1 ** 3], axis=-1)

    def diffusion(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (2, 1))
        out[..., 1, 0] = self.params["g"](x[..., 0])
        return out

    def diffusion_gradient(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (2, 1, 2))
        out[..., 1, 0, 0] = self.params["dg"](x[..., 0])
        return out

    def lyapunov(self, theta=None, eta=None):
        p = self.params
        alpha1 = p["alpha1"]

        def V(x):
            x = np.asarray(x, dtype=float)
            return x[..., 0] ** 4 / 2.0 + alpha1 * x[..., 0] ** 2 + x[..., 1] ** 2

        def gradV(x):
            x = np.asarray(x, dtype=float)
            return np.stack([2.0 * x[..., 0] ** 3 + 2.0 * alpha1 * x[..., 0], 2.0 * x[..., 1]], axis=-1)

        def hessV(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros(x.shape[:-1] + (2, 2))
            out[..., 0, 0] = 6.0 * x[..., 0] ** 2 + 2.0 * alpha1
            out[..., 1, 1] = 2.0
            return out

        C = 5.0 * p["eta0"] + 10.0 * p["eta1"] + 2.0 * p["alpha2"]
        return LyapunovData(V, gradV, hessV, theta=theta or 1.0, eta=eta or 1.0, C=C, M=1.0, description="x1^4/2 + alpha1 x1^2 + x2^2")


model_class = DuffingVanDerPol

import numpy as np

from ..lyapunov import LyapunovData
from .base import SdeModel


def _square(x):
    return np.sum(x ** 2, axis=-1)


class Cubic(SdeModel):
    """The scalar equation ``dx = -x^3 dt + x^2 dW``.

    Its skeleton drift ``b - (grad sigma) sigma / 2`` is ``-2 x^3``.
    """

    name = "cubic"
    priority = 10
    default_x0 = (0.5,)

    def drift(self, x):
        return -np.asarray(x, dtype=float) ** 3

    def diffusion(self, x):
        x = np.asarray(x, dtype=float)
        return (x ** 2)[..., None]

    def diffusion_gradient(self, x):
        x = np.asarray(x, dtype=float)
        return (2.0 * x)[..., None, None]

    def lyapunov(self, theta=None, eta=None):
        def gradV(x):
            return 2.0 * np.asarray(x, dtype=float)

        def hessV(x):
            x = np.asarray(x, dtype=float)
            return np.full(x.shape + (1,), 2.0)

        return LyapunovData(_square, gradV, hessV, theta=theta or 1.0, eta=eta or 4.0, C=1.0, M=1.0, description="x^2")


model_class = Cubic

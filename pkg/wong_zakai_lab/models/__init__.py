from . import base
from . import cubic
from . import duffing_vdp
from . import lotka_volterra
from . import sir
from . import threshold_ou

from . import registry

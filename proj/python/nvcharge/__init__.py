"""NV charge-state dynamics under green and IR illumination."""

from ._nvcharge import *  # noqa: F401,F403
from ._nvcharge import ConfigError, NumericalError  # noqa: F401

from ._regobs import *  # noqa: F401,F403
from ._regobs import __version__  # noqa: F401

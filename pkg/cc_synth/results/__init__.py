from .reader import *  # noqa: F401 F403
from .tables import *  # noqa: F401 F403

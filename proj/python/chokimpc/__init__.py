from ._chokimpc import *  # noqa: F401,F403
from ._chokimpc import __version__  # noqa: F401

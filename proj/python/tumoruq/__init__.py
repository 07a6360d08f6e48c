from _tumoruq import *  # noqa: F401,F403

""" pcp_bnp: branch-and-price for partition-coloring EV charging schedules """
import logging
from importlib.metadata import version

__copyright__ = "2026 pcp-bnp developers"

try:
    __version__ = version("pcp-bnp")
except Exception:
    __version__ = 'devel'


# Set up logging
def register_logger(new_logger):
    """Register `new_logger` as the logger used by pcp_bnp."""
    global logger
    logger = new_logger


register_logger(logging.getLogger(__name__))
# --------------

from .instance import Interval, Instance, generate  # noqa
from .instance import read_instance, write_instance, makespan  # noqa
from .graph import ConflictGraph, build_conflict_graph  # noqa
from .config import SolverConfig  # noqa
from .bnp import solve  # noqa

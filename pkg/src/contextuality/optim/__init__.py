from .lp import LinearProgram, LpIterationLimit, LpResult, solve_lp
from .sdp import SdpNotConverged, SdpSolution, solve_theta

__all__ = ["LinearProgram", "LpIterationLimit", "LpResult", "solve_lp",
           "SdpNotConverged", "SdpSolution", "solve_theta"]

"""Monte Carlo engine: PPP drops, association, scheduling and SIR/rate statistics."""
from .engine import (
    DEFAULT_HALF_WIDTH, DropResult, Estimate, Realization, estimate, realize, run_drop, simulate, wilson,
)

from vlcsim.metrics.chanmetrics import (
    SpotStats,
    condition_number,
    diagonal_dominance,
    spot_stats,
    square_condition_number,
)

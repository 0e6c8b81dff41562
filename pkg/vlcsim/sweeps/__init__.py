from vlcsim.sweeps.sweep import (
    Interval,
    Metric,
    Motion,
    SweepResult,
    SweepSpec,
    SweepStep,
    collapse_offset,
    evaluate_offset,
    movable_range,
    run_sweep,
)
from vlcsim.sweeps.tables import capacity_table, parse_offset

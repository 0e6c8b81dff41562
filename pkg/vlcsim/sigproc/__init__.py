from vlcsim.sigproc.combining import mrc_weights, select_receivers, single_pd_weights
from vlcsim.sigproc.plan import (
    Accounting,
    CapacityReport,
    ProcessingMode,
    ProcessingPlan,
    WeightVector,
)
from vlcsim.sigproc.sic import (
    build_plan,
    calibrate_noise_variance,
    capacity,
    decode_order,
    evaluate,
    sic_sinr,
)
from vlcsim.sigproc.symbols import SymbolReport, simulate_symbols

from vlcsim.raytrace.emission import (
    EmissionCone,
    cone_mass,
    importance_cone,
    sample_emission,
    sample_emission_batch,
)
from vlcsim.raytrace.estimate import ChannelMatrix, SpotMap, estimate_channel
from vlcsim.raytrace.tracer import DetectorHit, Fate, trace, trace_batch

from vlcsim.lensopt.objective import LensParams, objective
from vlcsim.lensopt.optimize import OptimizerOptions, OptResult, TracePoint, optimize

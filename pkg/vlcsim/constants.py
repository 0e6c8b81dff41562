"""Reference geometry of the 4x4 array link and its optimized lens pair.

All lengths in mm, angles in degrees. Heights are measured from the PD
plane (z = 0) towards the LED plane.
"""
from os.path import dirname, join

PACKAGE_DIR = dirname(__file__)
CONFIG_DIR = join(PACKAGE_DIR, "configs")
DEFAULT_CONFIG = join(CONFIG_DIR, "default.json")
PUBLISHED_DATA = join(PACKAGE_DIR, "evaluation", "published.json")

########## LED ARRAY ##########

LED_GRID_N = 4
LED_SIZE = 10.0
LED_GAP = 10.0
LED_PLANE_Z = 5050.0
LAMBERTIAN_EXPONENT = 10.0

########## PD ARRAY ##########

PD_GRID_N = 4
PD_SIZE = 0.6
PD_GAP = 0.1
PD_PLANE_Z = 0.0

########## LENS PAIR ##########

LENS_INDEX = 1.5168
AMBIENT_INDEX = 1.0

CONVEX_APERTURE = 15.0
CONVEX_THICKNESS = 6.875
# back vertex at 53.125 mm; a 20.5 mm air gap ends at the concave front vertex.
# The quartic terms flatten the margin and bring the pair to a sharp focus on the PDs.
CONVEX_FRONT_Z = 60.0
CONVEX_ALPHA_FRONT = 0.036
CONVEX_ALPHA_BACK = 0.007
CONVEX_BETA_FRONT = 2e-5
CONVEX_BETA_BACK = -2e-5

CONCAVE_APERTURE = 10.0
CONCAVE_THICKNESS = 2.0
CONCAVE_FRONT_Z = 32.625
CONCAVE_ALPHA_FRONT = -0.08
CONCAVE_ALPHA_BACK = 0.05

########## NUMERICS ##########

INTERSECT_TOL = 1e-9
MIN_HIT_T = 1e-9
CONE_PADDING = 1.1
RAYS_PER_LED = 200_000
RAYS_PER_BATCH = 20_000
DEFAULT_SEED = 2023

########## OPTIMIZATION ##########

ALPHA_BOUND = 0.2
PENALTY = 1e9
SIMPLEX_DIAMETER_TOL = 1e-5

########## SIGNAL PROCESSING ##########

SUBSET_SIZE = 4
PUBLISHED_NO_PROCESSING_CAPACITY = 0.986
PUBLISHED_SIC_TAIL_CAPACITY = 20.917
GOOD_KAPPA = 10.0

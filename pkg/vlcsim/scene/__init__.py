from vlcsim.scene.arrays import LedArraySpec, PdArraySpec, element_center
from vlcsim.scene.pose import IDENTITY, Pose, RigidTransform, compose
from vlcsim.scene.scene import Scene, Target, apply_pose, default_lenses, default_scene

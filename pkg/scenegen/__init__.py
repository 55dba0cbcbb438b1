# scenegen/__init__.py
# dataset.py is imported explicitly: it writes through ingestion, which imports SceneSample from here.

from .camera import Camera
from .primitives import Material, Primitive, SceneSpec, random_scene_spec
from .render import check_sample, normals_from_depth, render
from .sample import SceneSample

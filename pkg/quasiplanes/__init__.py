from .__version__ import __version__
from .config import ExperimentConfig, GeneratorSpec
from .project import ExperimentProject
from .tools.geometry import AffineMap, Plane, SampledSet
from .tools.quasisymmetry import SampledMap
from .tools.families import AffineFamily

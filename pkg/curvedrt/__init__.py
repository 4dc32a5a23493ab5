from .errors import *
from .utils import *
from .geometry import *
from .meshes import *
from .fem import *
from .analysis import *
from .cases import *

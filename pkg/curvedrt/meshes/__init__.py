from .mesh import *
from .generators import *
from .io import *

from .quadrature import *
from .core import *
from .spaces import *
from .assembly import *

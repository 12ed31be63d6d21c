from .checkpoint import *
from .functional import *
from .gradcheck import *
from .init import *
from .optim import *
from .tensor import *

from .audio import *
from .cache import *
from .config import *
from .corpus import *
from .enums import *
from .errors import *
from .models import *
from .pipeline import *
from .scoring import *
from .synth import *
from .trainer import *
from .util import *

__title__ = "replayguard"
__author__ = "Merlin Fuchs"
__license__ = "MIT"
__copyright__ = "Copyright 2020 (c) Merlin Fuchs"
__version__ = "0.1.0"

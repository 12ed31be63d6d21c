from enum import Enum, IntEnum


__all__ = (
    "Label",
    "LayerKind",
    "Activation",
    "Padding",
    "EERMethod",
    "Subset",
    "Representation",
)


class Label(IntEnum):
    SPOOF = 0
    GENUINE = 1

    @classmethod
    def parse(cls, token):
        token = token.strip().lower()
        if token == "genuine":
            return cls.GENUINE

        if token in ("spoof", "spoofed"):
            return cls.SPOOF

        raise ValueError(f"unknown label {token!r}")

    @property
    def token(self):
        return "genuine" if self is Label.GENUINE else "spoof"


class LayerKind(str, Enum):
    CONV = "conv"
    MAXPOOL = "maxpool"
    ACTIVATION = "activation"
    FLATTEN = "flatten"
    DROPOUT = "dropout"
    LINEAR = "linear"


class Activation(str, Enum):
    MFM = "mfm"
    RELU = "relu"
    ELU = "elu"
    IDENTITY = "identity"


class Padding(str, Enum):
    SAME = "same"
    VALID = "valid"


class EERMethod(str, Enum):
    ROCCH = "rocch"
    INTERPOLATED = "interpolated"


class Subset(str, Enum):
    TRAIN = "train"
    DEV = "dev"
    EVAL = "eval"


class Representation(str, Enum):
    SPLIT = "split"
    SINGLE = "single"

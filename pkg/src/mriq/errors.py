"""Exception types shared across the package."""


class MriqError(Exception):
    pass


class ParameterError(MriqError, ValueError):
    """A distortion or augmentation parameter lies outside its allowed range."""


class VolumeFormatError(MriqError, ValueError):
    """A volume file could not be decoded."""


class ShapeMismatchError(MriqError, ValueError):
    pass


class ContractError(MriqError, ValueError):
    """Input violates a precondition (e.g. a reference that was never preprocessed)."""

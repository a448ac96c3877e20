"""Error types raised across the pipeline.

`DataError` subclasses describe bad or missing input data and map to CLI exit
code 2. `ConfigError` maps to exit code 1 alongside click usage errors.
"""


class XsumForgeError(Exception):
    """Base class for every error this package raises on purpose."""


class ConfigError(XsumForgeError):
    pass


# ---------- data ----------

class DataError(XsumForgeError):
    pass


class MissingSummaryClass(DataError):
    """HTML page has no element carrying the summary class."""


class EmptySource(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class EmptyDocument(DataError):
    pass


class EmptyReference(DataError):
    pass


class MissingReference(DataError):
    pass


class EmptyValidationSet(DataError):
    pass


class EmptyTargets(DataError):
    """Every target position in a batch is padding."""


class MissingInput(DataError):
    """A path named by the config does not exist."""


class ArtifactFormatError(DataError):
    """A vocab, topic or checkpoint file could not be decoded."""


# ---------- numerics / model ----------

class ModelError(XsumForgeError):
    pass


class ShapeMismatch(ModelError):
    pass


class OddWidth(ModelError):
    pass


class IndexOutOfVocab(ModelError):
    pass


class DetachedTensor(ModelError):
    """backward() was asked for a tensor that was not recorded on a tape."""


class PositionOverflow(ModelError):
    pass

"""Exception hierarchy shared by all modules.

Every domain failure raises a subclass of MekError so the CLI can map
them to a single nonzero exit code; usage errors stay with argparse.
"""


class MekError(Exception):
    pass


# image preprocessing

class DegenerateImage(MekError):
    """Contrast enhancement needs at least two distinct intensities."""


class InvalidTargets(MekError):
    """Target intensities must satisfy min < mean < max within [0, 255]."""


class TooFewDistinctValues(MekError):
    """K-means needs at least k distinct intensity values."""


class ImageTooSmall(MekError):
    """Raster smaller than the operator's support."""


# features

class IncompatibleDimensions(MekError):
    """Image dimensions not divisible into the requested cell/block grid."""


# classifiers

class DimensionMismatch(MekError):
    """Vectors or matrices with differing feature dimensions."""


class KTooLarge(MekError):
    """KNN neighbour count exceeds the training set size."""


class NegativeFeature(MekError):
    """Chi-square kernel requires non-negative feature entries."""


class SingleClassDataset(MekError):
    """SVM training needs at least two classes present."""


class ModelFormatError(MekError):
    """Model file is missing the magic header or is structurally invalid."""


# ensemble

class LengthMismatch(MekError):
    """Mismatched number of models, weights, samples, or labels."""


class AllZeroWeights(MekError):
    """Weight vectors must contain at least one positive entry."""


class MissingAccuracies(MekError):
    """Accuracy-ranked weighting needs an accuracy for every model."""


class BudgetTooSmall(MekError):
    """Weight search budget below the minimum of one evaluation per model."""


# evaluation

class LabelOutOfRange(MekError):
    """Label index is not smaller than the declared class count."""


class EmptyMatrix(MekError):
    """Metrics are undefined for a confusion matrix with no samples."""


# file formats

class ParseError(MekError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicatePath(MekError):
    """Manifest paths must be unique."""


class UnknownSplit(MekError):
    """Manifest split values must be 'train' or 'test'."""


class ClassTooSmall(MekError):
    """Stratified splitting needs at least two samples per class."""


class HeaderMismatch(MekError):
    """File header does not match the expected column layout."""


class RowSumError(MekError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateSampleId(MekError):
    """Sample identifiers within one file must be unique."""

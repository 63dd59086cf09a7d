"""Exception hierarchy shared by every phishstack module."""


class PhishstackError(Exception):
    """Base class for all errors raised by this package."""


# -- dataset -----------------------------------------------------------------

class DatasetError(PhishstackError):
    pass


class SchemaError(DatasetError):
    pass


class MissingColumnError(DatasetError):
    def __init__(self, column, path=None):
        self.column = column
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"missing column {column!r}{where}")


class NonNumericCellError(DatasetError):
    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"non-numeric or non-finite value {value!r} at row {row}, column {column!r}")


class UnknownLabelValueError(DatasetError):
    def __init__(self, value, row=None):
        self.value = value
        self.row = row
        super().__init__(f"unknown label value {value!r}" + (f" at row {row}" if row is not None else ""))


class EmptyDatasetError(DatasetError):
    pass


class TooFewSamplesPerClassError(DatasetError):
    pass


class FoldIndexOutOfRangeError(DatasetError, IndexError):
    pass


# -- learners / meta-learner ---------------------------------------------------

class LearnerError(PhishstackError):
    pass


class SingleClassTrainingError(LearnerError):
    pass


class DimensionMismatchError(LearnerError, ValueError):
    pass


class NonFiniteLossError(LearnerError, FloatingPointError):
    pass


# -- feature selection / stacking ---------------------------------------------

class MaskIndexOutOfRangeError(PhishstackError, IndexError):
    pass


class LeakageError(PhishstackError):
    """An out-of-fold prediction was produced by a model that saw the row."""


# -- metrics ------------------------------------------------------------------

class LengthMismatchError(PhishstackError, ValueError):
    pass


class SingleClassEvaluationError(PhishstackError, ValueError):
    pass


# -- runner -------------------------------------------------------------------

class ConfigError(PhishstackError):
    pass


class ModelFileError(PhishstackError):
    pass


class VersionMismatchError(ModelFileError):
    pass


class SchemaHashMismatchError(ModelFileError):
    pass


class CorruptPayloadError(ModelFileError):
    pass

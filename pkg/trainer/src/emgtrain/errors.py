class EmgTrainError(Exception):
    """Base class for trainer-specific errors."""


class EmptyDataset(EmgTrainError):
    """No usable training windows after cutting and label filtering."""


class MissingClass(EmgTrainError):
    """The dataset does not cover all seven gesture classes."""


class DivergedTraining(EmgTrainError):
    """The training loss became non-finite."""

"""Exception hierarchy shared across the toolkit."""


class UiharvestError(Exception):
    """Base class for all domain errors raised by this package."""


class UrlError(UiharvestError):
    pass


class MalformedUrlError(UrlError):
    """The URL text could not be parsed into an absolute http(s) URL."""


class RejectedSchemeError(UrlError):
    """The URL has a scheme we never crawl (javascript:, mailto:, ...)."""


class StaleLeaseError(UiharvestError):
    """A result referenced a lease id that was never issued."""


class SnapshotError(UiharvestError):
    """Writing or reading a state snapshot failed; prior snapshot is intact."""


class StorageError(UiharvestError):
    pass


class SampleNotFoundError(StorageError):
    """No stored sample with the requested id."""


class CorruptSampleError(StorageError):
    """A sample directory is missing one of its required files."""


class SampleValidationError(StorageError):
    """Stored sample data violates a schema invariant."""


class SubsetSizeError(UiharvestError):
    """Requested subset size exceeds the eligible sample count."""


class EmptyCorpusError(UiharvestError):
    """An operation that needs at least one sample got none."""


class EmptyTableError(EmptyCorpusError):
    """No element of any class in the corpus; no frequency table exists."""


class ExhaustedCorpusError(UiharvestError):
    """Resampling ran out of samples carrying any labeled element."""


class AxTreeParseError(UiharvestError):
    """The accessibility payload is missing the tree or is unreadable."""


class DeviceCaptureError(UiharvestError):
    """A single device capture failed; the device is marked error."""


class NavigationError(DeviceCaptureError):
    pass


class BrowserUnreachableError(NavigationError):
    """The remote-debugging endpoint could not be reached at all."""


class ScreenshotError(DeviceCaptureError):
    pass


class ImageDecodeError(UiharvestError):
    """An image file or byte string could not be decoded."""


class ConfigError(UiharvestError):
    """Bad TOML config: unknown key, missing path, or wrong type."""

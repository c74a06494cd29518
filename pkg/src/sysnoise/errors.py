"""Exception hierarchy shared by all sysnoise modules."""


class SysNoiseError(Exception):
    """Base class for every error raised by this package."""


class JpegError(SysNoiseError, ValueError):
    pass


class MalformedStreamError(JpegError):
    """Bad markers, truncated entropy data or an invalid Huffman code."""


class UnsupportedFeatureError(JpegError):
    """Valid JPEG, but outside the baseline subset handled here."""


class MalformedBlockError(JpegError):
    pass


class ConfigError(SysNoiseError, ValueError):
    """Invalid configuration (unknown preset, empty candidate set, ...)."""


class UnsupportedCombinationError(ConfigError):
    """Kernel/convention pair that the emulated library does not offer."""


class InvalidCellError(SysNoiseError, ValueError):
    pass


class InvalidCropError(SysNoiseError, ValueError):
    pass


class MetaFormatError(SysNoiseError, ValueError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class TensorFormatError(SysNoiseError, ValueError):
    pass

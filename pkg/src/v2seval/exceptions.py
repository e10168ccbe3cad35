"""Exception hierarchy for the toolkit.

Every anticipated failure maps to a typed exception below; loaders and the
CLI never surface bare asserts or KeyErrors for malformed inputs.
"""


class V2SEvalError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedEncodingError(V2SEvalError):
    """WAV codec other than PCM16 / IEEE float32, or channel count > 2."""


class CorruptHeaderError(V2SEvalError):
    """File is not a well-formed RIFF/WAVE container."""


class EmptySignalError(V2SEvalError):
    """Operation requires at least one sample."""


class ShapeMismatchError(V2SEvalError):
    """Array shapes incompatible with the operation."""


class NonFiniteInputError(V2SEvalError):
    """Input contains NaN or infinity."""


class IndivisibleChannelsError(V2SEvalError):
    """Channel count not divisible by the upsampling factor."""


class GrossMisalignmentError(V2SEvalError):
    """Frame counts differ by more than the edge-effect tolerance."""


class CropTooLargeError(V2SEvalError):
    """Requested crop exceeds the frame dimensions."""


class TooShortError(V2SEvalError):
    """Signal shorter than the metric's analysis window."""


class RateMismatchError(V2SEvalError):
    """Inputs carry different sample rates."""


class IdMismatchError(V2SEvalError):
    """Paired lists cannot be matched element-wise."""


class ZeroVectorError(V2SEvalError):
    """Embedding with zero norm cannot be cosine-scored."""


class DegenerateLabelsError(V2SEvalError):
    """Score set contains only one label class."""


class MissingEmbeddingError(V2SEvalError):
    """Trial references an id absent from the embedding map."""

    def __init__(self, utterance_id: str):
        self.utterance_id = utterance_id
        super().__init__(f"no embedding for id {utterance_id!r}")


class EmptyReferenceError(V2SEvalError):
    """WER reference transcript has no words."""


class DuplicateIdError(V2SEvalError):
    """Id occurs more than once where uniqueness is required."""


class DimensionMismatchError(V2SEvalError):
    """Embedding vectors do not share one dimension."""


class MalformedLineError(V2SEvalError):
    """Text-format line does not parse; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class ParseError(V2SEvalError):
    """Binary or JSON payload does not match its declared format."""


class ManifestError(V2SEvalError):
    """Manifest entry violates the manifest schema."""

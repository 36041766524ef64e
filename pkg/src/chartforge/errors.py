"""Exception hierarchy for the chartforge pipeline.

Errors are grouped by the exit code the CLI maps them to: usage (1),
data (2), and I/O (3).
"""


class ChartForgeError(Exception):
    """Base class for all pipeline errors."""


class UsageError(ChartForgeError):
    """Bad invocation: unknown flag, malformed config, invalid metric name."""


class DataError(ChartForgeError):
    """Input data violates a contract."""


class IOFailure(ChartForgeError):
    """Filesystem or network problem."""


# --- ingest ---------------------------------------------------------------

class EmptyInput(DataError):
    """CSV text has no header row."""


class RaggedRow(DataError):
    """A data row's cell count differs from the header length."""


class EncodingError(DataError):
    """Input bytes are not valid UTF-8."""


class TextOnly(DataError):
    """No numeric column survives cleaning."""


class TooFewRows(DataError):
    """Fewer than 2 rows survive cleaning."""


# --- recommend ------------------------------------------------------------

class NoCandidates(DataError):
    """No chart-type/encoding combination is compatible with the table."""


# --- codegen --------------------------------------------------------------

class EmptyData(DataError):
    """Chart data slice has zero rows."""


class UnsupportedCombination(DataError):
    """The spec requires a feature the target grammar's templates lack."""


# --- analysis -------------------------------------------------------------

class EmptySeries(DataError):
    """Statistic requested over an empty series."""


class SingletonSeries(DataError):
    """Trend requested over a single-point series."""


class LengthMismatch(DataError):
    """Paired series have different lengths."""


# --- caption --------------------------------------------------------------

class HttpError(DataError):
    """LLM endpoint answered with status >= 400."""

    def __init__(self, status: int, body: str = ""):
        super().__init__(f"endpoint returned status {status}")
        self.status = status
        self.body = body


class Timeout(DataError):
    """LLM endpoint did not answer within the configured timeout."""


class EmptyCompletion(DataError):
    """LLM endpoint answered with an empty completion."""


# --- cards ----------------------------------------------------------------

class InconsistentParts(DataError):
    """Card parts do not share the same spec lineage."""


class EmptySlice(DataError):
    """Table slice has no rows."""


class NoFacts(DataError):
    """QA generation requested for a card without analysis facts."""


class EmptyStore(DataError):
    """Card store contains no cards."""


class SchemaVersionError(DataError):
    """Card store was written with an unknown schema version."""


# --- eval -----------------------------------------------------------------

class ZeroVector(DataError):
    """Cosine similarity requested against an all-zero vector."""


class InvalidTau(DataError):
    """Contrastive-loss temperature must be > 0."""


class IndexOutOfRange(DataError):
    """Correct index outside the similarity row."""


class EmptyEvalInput(DataError):
    """Metric aggregation over zero queries/examples."""


class ParseError(DataError):
    """Prediction or gold text does not parse under the expected format."""


# --- review ---------------------------------------------------------------

class UnknownCard(DataError):
    """Rating refers to a card_id not present in the store."""


class DuplicateRating(DataError):
    """Worker already rated this card."""


class ScoreOutOfRange(DataError):
    """A criterion score is outside 1..5."""


class UnknownWorker(DataError):
    """Worker registry is enabled and this worker_id is not in it."""

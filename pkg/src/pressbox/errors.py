"""Exception hierarchy.

Data problems (bad records, empty inputs, mismatched ids) and remote-service
problems are kept on separate branches so the CLI can map them to distinct
exit codes.
"""


class PressboxError(Exception):
    pass


class DataError(PressboxError):
    """Anything wrong with the inputs themselves."""


class MalformedRecord(DataError):
    def __init__(self, line: int, cause: str):
        super().__init__(f"line {line}: {cause}")
        self.line = line
        self.cause = cause


class EmptyCorpus(DataError):
    pass


class MismatchedReport(DataError):
    pass


class EmptyText(DataError):
    pass


class IndexOutOfRange(DataError):
    pass


class DegenerateLabels(DataError):
    pass


class ModelNotTrained(DataError):
    pass


class EmptyCandidates(DataError):
    pass


class NoReferenceNews(DataError):
    pass


class MissingReference(DataError):
    def __init__(self, game_id: str):
        super().__init__(f"no reference news for game {game_id!r}")
        self.game_id = game_id


class CountsExceedCorpus(DataError):
    pass


class InvalidSplit(DataError):
    pass


class ServiceError(PressboxError):
    """Anything wrong with a remote scorer/rewriter service."""


class ServiceUnavailable(ServiceError):
    pass


class ProtocolError(ServiceError):
    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ItemFailure(ServiceError):
    def __init__(self, index: int, detail: str = ""):
        super().__init__(f"item {index} failed" + (f": {detail}" if detail else ""))
        self.index = index

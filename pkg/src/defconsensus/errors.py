"""Shared exception hierarchy for the consensus pipeline."""


class DefConsensusError(Exception):
    """Base class for all pipeline errors."""


class MalformedRecord(DefConsensusError):
    def __init__(self, index: int, reason: str):
        self.index = index
        self.reason = reason
        super().__init__(f"record {index}: {reason}")


class DuplicateId(DefConsensusError):
    def __init__(self, definition_id: str):
        self.definition_id = definition_id
        super().__init__(f"duplicate definition id: {definition_id!r}")


class EmptyCorpus(DefConsensusError):
    pass


class UnknownId(DefConsensusError):
    def __init__(self, definition_id: str):
        self.definition_id = definition_id
        super().__init__(f"unknown definition id: {definition_id!r}")


class ZeroVector(DefConsensusError):
    pass


class DimensionMismatch(DefConsensusError):
    pass


class ModelMismatch(DefConsensusError):
    pass


class EmptySet(DefConsensusError):
    pass


class MissingVector(DefConsensusError):
    def __init__(self, definition_id: str):
        self.definition_id = definition_id
        super().__init__(f"no stored vector for definition id: {definition_id!r}")


class MalformedFile(DefConsensusError):
    pass


class ProviderUnavailable(DefConsensusError):
    pass


class MalformedResponse(DefConsensusError):
    pass


class UnknownCandidate(DefConsensusError):
    def __init__(self, candidate_id: str):
        self.candidate_id = candidate_id
        super().__init__(f"candidate id not in matrix: {candidate_id!r}")


class EmptyReferenceSet(DefConsensusError):
    pass

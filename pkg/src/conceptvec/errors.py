"""Exception hierarchy shared by all conceptvec modules."""


class ConceptVecError(Exception):
    """Base class for every error raised deliberately by this package."""


class FormatError(ConceptVecError):
    """Malformed input file or record."""

    def __init__(self, message, line=None, source=None):
        self.message = message
        self.line = line
        self.source = source
        if source is not None:
            where = f"{source}:{line}: " if line is not None else f"{source}: "
        else:
            where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class DomainError(ConceptVecError):
    """Input is well-formed but cannot be processed (empty vocabulary, etc.)."""


class EmptyVocabularyError(DomainError):
    def __init__(self):
        super().__init__("empty vocabulary")


class NothingToTrainError(DomainError):
    def __init__(self):
        super().__init__("nothing to train on")


class TrainingDivergedError(DomainError):
    pass


class EmptyBocError(DomainError):
    def __init__(self):
        super().__init__("empty BOC")


class NoEmbeddableConceptsError(DomainError):
    def __init__(self, skipped):
        self.skipped = skipped
        super().__init__(f"no embeddable concepts ({skipped} skipped)")

"""Exception hierarchy. Every pipeline failure derives from AsymopError so the
CLI can turn it into a one-line machine-parseable message."""


class AsymopError(Exception):
    """Base class; ``code`` is the stable name printed by the CLI."""

    @property
    def code(self) -> str:
        return type(self).__name__


# corpus
class MissingHeader(AsymopError):
    def __init__(self, name: str):
        super().__init__(f"missing header: {name}")
        self.name = name


class BadDate(AsymopError):
    pass


class IoFailure(AsymopError):
    def __init__(self, path, reason: str = ""):
        super().__init__(f"cannot read {path}" + (f": {reason}" if reason else ""))
        self.path = path


class EmptyCorpus(AsymopError):
    pass


# lang_features
class NoScorableSentences(AsymopError):
    pass


class LexiconError(AsymopError):
    pass


# habit_norm
class EmptyCommunicatorSet(AsymopError):
    pass


class ZeroHabit(AsymopError):
    pass


class NoQualifyingIndividuals(AsymopError):
    pass


# relgraph
class EmptyGraph(AsymopError):
    pass


class MissingFeature(AsymopError):
    def __init__(self, edge, feature: str):
        super().__init__(f"edge {edge[0]}->{edge[1]} has no usable value for {feature}")
        self.edge = edge
        self.feature = feature


# balance_model / solver
class DomainError(AsymopError, ValueError):
    pass


class UnsetPrediction(AsymopError):
    def __init__(self, edge):
        super().__init__(f"edge {edge} has no prediction f_e")
        self.edge = edge


class TooLarge(AsymopError):
    pass


class NotConverged(AsymopError):
    pass


# analysis
class DegenerateSeries(AsymopError):
    pass


class TooFew(AsymopError):
    pass


class TooFewQualifying(AsymopError):
    pass


class NoUsablePairs(AsymopError):
    pass


# cli
class MissingArtifact(AsymopError):
    def __init__(self, path):
        super().__init__(f"required artifact not found: {path}")
        self.path = path


class ConfigError(AsymopError):
    pass

"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for errors raised by teachmind."""


class ModelMismatch(EngineError):
    """An index, label, or vector does not fit the model it was used with."""


class ZeroNormalizer(EngineError):
    """Bayes update received an observation with probability zero under the
    predicted belief; the normalizer is undefined and the update refuses to
    return a NaN belief."""


class ParticleCollapse(EngineError):
    """Every particle weight went to zero during a filter update."""


class GroundingError(EngineError):
    """A nested agent model does not terminate in a level-0 policy within the
    configured depth cap."""


class EmptyBelief(EngineError):
    """Pruning removed every branch of an interactive belief."""

"""Exception hierarchy shared across the pipeline."""


class MercatorError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MercatorError):
    """Invalid event configuration or weights."""


class CorpusError(MercatorError):
    """Corpus file is malformed or unreadable."""


class ProviderError(MercatorError):
    """News provider failure."""


class ProviderAuthError(ProviderError):
    """Credentials rejected; names the provider. Not retryable."""


class ProviderNetworkError(ProviderError):
    """Network failure after bounded retries."""


class EmbedServiceError(MercatorError):
    """Embedding service unreachable or returned a bad response."""


class MarketLookupError(MercatorError):
    """Unknown market id or malformed market response."""


class ChatServiceError(MercatorError):
    """Chat-completion endpoint unreachable after retries."""


class AbstentionError(MercatorError):
    """A module has no signal for this event (e.g. no articles, no markets).

    Abstention is not fatal: the forecast combiner redistributes the
    module's weight among the modules that did produce a probability.
    """

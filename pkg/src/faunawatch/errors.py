"""Exception hierarchy.

Every error carries a short machine-readable ``code`` which the CLI prints as
``error:<code>: <message>``.
"""


class FaunawatchError(Exception):
    code = "error"


# configuration
class MalformedConfig(FaunawatchError):
    code = "malformed_config"


class EmptyFamily(FaunawatchError):
    code = "empty_family"


class DuplicateTaxon(FaunawatchError):
    code = "duplicate_taxon"


class InvalidCountryCode(FaunawatchError):
    code = "invalid_country_code"


class InvalidWindow(FaunawatchError):
    code = "invalid_window"


# search
class MalformedResponse(FaunawatchError):
    code = "malformed_response"


class WindowTooWide(FaunawatchError):
    code = "window_too_wide"


class TransportError(FaunawatchError):
    code = "transport_error"

    def __init__(self, message, *, context=None):
        super().__init__(message)
        self.context = context or {}


# retrieval
class HttpError(FaunawatchError):
    code = "http_error"

    def __init__(self, status, url=""):
        super().__init__(f"HTTP {status} for {url}" if url else f"HTTP {status}")
        self.status = status
        self.url = url


class NonHtmlContent(FaunawatchError):
    code = "non_html_content"


class EmptyDocument(FaunawatchError):
    code = "empty_document"


# relevance
class MissingClass(FaunawatchError):
    code = "missing_class"


class InvalidLabel(FaunawatchError):
    code = "invalid_label"


class MissingModel(FaunawatchError):
    code = "missing_model"


# store
class StoreIOError(FaunawatchError):
    code = "io_error"


class CorruptLine(FaunawatchError):
    code = "corrupt_line"


class InvalidId(FaunawatchError):
    code = "invalid_id"


class NoUnlabeled(FaunawatchError):
    code = "no_unlabeled"


# analytics
class EmptyWindow(FaunawatchError):
    code = "empty_window"


class UnscoredRecord(FaunawatchError):
    code = "unscored_record"


class NoResolvedCountries(FaunawatchError):
    code = "no_resolved_countries"


class EmptySeries(FaunawatchError):
    code = "empty_series"

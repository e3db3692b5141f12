"""Parse, run and generate clients for ``.http`` request description files."""

from .model import (
    AbstractUrl, BasicAuthSpec, Body, Customization, Diagnostic, EntityKind,
    Header, HttpMessage, MediaType, Parameter, ProxySpec, RequestDocument,
    RequestMethod, ReturnForm, ReturnValue, Severity, Span, VariableKind,
    VariableRef, WellKnownHeader,
)
from .parser import DslSyntaxError, parse_directory, parse_document, parse_file
from .formatter import format_document, format_source
from .validation import validate_document, validate_message

__version__ = "0.1.0"

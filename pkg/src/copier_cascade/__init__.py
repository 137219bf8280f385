"""Copier-enhanced photodetection: exact cascade statistics and gain regions."""

__version__ = "0.1.0"
# stamped into every JSON output as ``spec_version``
FORMAT_VERSION = "1.0"

"""menagerie: text-driven animal avatar animation toolkit."""

__version__ = "0.1.0"

"""Mine (syntax-error, human-fix) pairs from Stack Overflow edit histories."""

__version__ = "0.1.0"

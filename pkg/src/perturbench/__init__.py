"""Two-factor image corruption benchmark generator and robustness harness."""

__version__ = "0.1.0"

# Version of the suite wire contract (manifest layout, seed derivation,
# digest rule). Bump whenever any of those change incompatibly.
SPEC_VERSION = "1.0"

"""Toolkit for a choreographic language with correlation-based sessions.

Source programs pair multiparty protocol declarations with a choreography.
The package checks them against the protocols, projects endpoint code,
compiles to a correlation-calculus network, executes both levels, and can
verify that the compiled network simulates the source semantics.
"""

__version__ = "0.1.0"

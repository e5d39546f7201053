"""Exact local constants for abelian data over unramified local fields,
and the finite-level unit-group congruence machinery built on them."""

__version__ = "0.1.0"

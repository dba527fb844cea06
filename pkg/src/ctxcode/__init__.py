"""Context-engineered multi-agent coding assistant.

Subsystems: an agent registry, a layered context engine, hybrid code
retrieval, an external-knowledge pipeline, a sandboxed tool layer over a
pluggable model provider, and an orchestrator that drives them through a
plan / edit / test / review loop.
"""

__version__ = "0.1.0"

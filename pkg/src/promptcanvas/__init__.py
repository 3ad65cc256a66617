"""Composable prompting workspace: control widgets on an infinite canvas,
five LLM orchestration flows, persistence, streaming, and record/replay."""

__version__ = "0.1.0"

"""Unit tests for measure-flow-lab."""

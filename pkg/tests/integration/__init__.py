"""Integration tests for measure-flow-lab."""

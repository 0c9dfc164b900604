"""Tests for measure-flow-lab."""

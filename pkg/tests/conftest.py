"""Shared pytest configuration."""

from tholdout.robust_tests import TestCache, TestKind

# library classes, not test containers
TestCache.__test__ = False
TestKind.__test__ = False

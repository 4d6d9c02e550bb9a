"""Test suite for paydiff."""

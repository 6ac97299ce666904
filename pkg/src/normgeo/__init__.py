"""Norm geometry toolkit."""

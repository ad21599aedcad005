"""Compiler and runtime for a physically typed colour-programming language."""

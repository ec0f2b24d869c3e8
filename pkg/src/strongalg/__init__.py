"""Computable strong algebras, their Wiener algebras and canonical factorization."""

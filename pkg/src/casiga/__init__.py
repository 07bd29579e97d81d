"""Quadratic NURBS isogeometric analysis with CAS locking treatments."""

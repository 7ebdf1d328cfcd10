"""Workflow mapping and scheduling for heterogeneous compute-continuum clusters."""

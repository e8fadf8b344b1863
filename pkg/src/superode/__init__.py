"""Exact algebra and dynamics for polynomial ODE systems over Grassmann and free algebras."""

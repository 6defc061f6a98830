"""Spectral upper bounds for toric Kähler metrics from moment-polytope data"""
__version__ = "1.0.0"

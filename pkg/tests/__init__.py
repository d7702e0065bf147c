"""
Test package for NehariLab.
"""

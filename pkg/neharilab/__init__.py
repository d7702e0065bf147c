"""
NehariLab: Nehari-manifold ground states for asymptotically linear elliptic problems.
"""

__version__ = "0.1.0"
__author__ = "NehariLab Team"
__license__ = "MIT"

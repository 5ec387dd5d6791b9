# __init__.py

__version__ = "0.1.0"
__author__ = "Robust Grasp Loss"

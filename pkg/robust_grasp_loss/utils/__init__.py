# __init__.py

from .gradcheck import check_gradient, gradient_error, numerical_gradient
from .serialization import load_dataset, save_dataset

__all__ = [
    "check_gradient",
    "gradient_error",
    "load_dataset",
    "numerical_gradient",
    "save_dataset",
]

"""
Coplanar VIO
"""

__title__ = "Coplanar VIO"
__version__ = "0.1.0"
__author__ = "Coplanar VIO developers"

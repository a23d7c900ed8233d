"""
Finsler convolution metric toolkit
"""
__version__ = "1.0.0"

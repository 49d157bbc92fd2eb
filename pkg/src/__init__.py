# Covert communication with random slot selection
__version__ = "0.1.0"

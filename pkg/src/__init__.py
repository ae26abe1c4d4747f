# High-resolution quantization toolkit
# Sources, lattices, quantizers, bounds and asymptotic experiments

__version__ = "0.3.0"

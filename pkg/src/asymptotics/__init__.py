# Excess-rate curves and high-resolution cell statistics

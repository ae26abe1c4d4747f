# Scalar and lattice quantizers
from src.quantization.evaluation import (
    EvaluationMode,
    QuantizerReport,
    calibrate_pattern_step,
    calibrate_uniform_step,
    cell_probabilities,
    distortion,
    evaluate,
    evaluate_lattice_quantizer,
    make_almost_regular,
    output_entropy,
    parse_quantizer,
    quantize,
)
from src.quantization.scalar import ScalarQuantizer, uniform_step_for_distortion
from src.quantization.vector import LatticeQuantizer

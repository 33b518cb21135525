"""Learned compression for complex baseband radio signals.

The package covers the full experimental loop: synthesis of a balanced
six-modulation I/Q dataset, a hierarchical encoder/decoder stack with
trainable vector quantization, staged training (plain autoencoder, then
vector quantization, then an added divergence regularizer), bit-exact
serialization of code indices, an SVD dimensioning bound, and a compact
modulation classifier used to measure how much task utility survives each
compression level.
"""

__version__ = "0.1.0"

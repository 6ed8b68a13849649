"""parkattn: interpretable cross-attention models for Parkinson's speech screening.

The package is organized around a small autodiff core (`tensor`), the
attention blocks and model architectures built on it (`attention`, `model`),
informed-feature extraction and normalization (`features`), dataset and split
handling (`data`), the training harness (`training`), and post-hoc
interpretability analyses (`interpret`).  `cli` wires everything into the
`parkattn` command.
"""

__version__ = "0.1.0"

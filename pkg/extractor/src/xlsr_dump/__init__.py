"""Offline hidden-state dumper for the frozen multilingual Wav2Vec2-XLSR
encoder.

Reads the experiment manifest (JSON-Lines), runs each conditioned 16 kHz
WAV through the pre-trained encoder without any fine-tuning, and writes the
selected transformer layer's hidden states as one T x 1024 SFM1 matrix per
utterance, consumable by the training pipeline.
"""

__version__ = "0.1.0"

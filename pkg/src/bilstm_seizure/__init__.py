"""Seizure prediction from multi-channel EEG with a stacked bidirectional LSTM.

The pipeline runs in four stages: clips are cut into 30 s windows, each
window becomes a vector of band power (PSI) and standard deviation features
per channel, a two-layer bidirectional LSTM classifies the window sequence
as preictal or interictal, and the scores are evaluated with ROC/AUC.
"""

__version__ = "0.1.0"

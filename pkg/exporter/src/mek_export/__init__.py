"""Batch inference exporter for the voting-ensemble toolchain.

Runs a trained deep backbone over a dataset manifest's test split and
writes the shared prediction interchange CSV plus a models.json entry,
so deep models can join the ensemble as plain files.
"""

__version__ = "0.1.0"

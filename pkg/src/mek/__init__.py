"""MRI ensemble kit.

Grayscale preprocessing (contrast enhancement, segmentation, edge
detection), HOG feature extraction, KNN/SVM classifiers, and a weighted
voting engine with integer weight search over per-model prediction files.
"""

__version__ = "0.1.0"

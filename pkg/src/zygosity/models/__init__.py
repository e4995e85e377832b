"""Classifiers: the two-layer network, its trainer, and the logistic baseline."""

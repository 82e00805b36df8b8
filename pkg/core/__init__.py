"""Probabilistic influenza-like-illness forecasting: networks, baselines, data and evaluation."""

TOOLKIT_VERSION = "0.1.0"

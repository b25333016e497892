"""spikebayes: Bayes and kernel plug-in classification of spike trains."""

__version__ = "0.1.0"

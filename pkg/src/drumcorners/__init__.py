"""Heat kernels, trace asymptotics and spectra of planar drums."""

__version__ = "0.1.0"

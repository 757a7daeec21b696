"""clinicap: clinic testing-capacity modeling, forecasting and what-if analysis."""

__version__ = "0.1.0"

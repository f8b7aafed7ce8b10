"""
SR-based OFDM channel estimation
Rayleigh link simulator, LS/LMMSE/MMSE baselines and from-scratch SRCNN/FSRCNN refiners
"""

__version__ = "1.0.0"
